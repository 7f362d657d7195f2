"""clarforge: build clarification-question datasets from NLD/code pairs and
evaluate interactive code generation pipelines.
"""

__version__ = "0.1.0"
