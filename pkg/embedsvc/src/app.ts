// HTTP sidecar serving deterministic sentence embeddings and dependency
// parses. Stateless between requests; /v1/health reports exact model
// versions and returns 503 until the models finish loading.

import express, { Express } from "express";
import { z } from "zod";

import { EMBED_DIM, EMBED_MODEL_ID, embedBatch } from "./embed.js";
import { PARSE_MODEL_ID, parseBatch } from "./parse.js";

export interface AppOptions {
  maxBatch?: number;
  // model-loading hook; requests are gated with 503 until it resolves
  load?: () => Promise<void>;
}

export interface Sidecar {
  app: Express;
  ready: Promise<void>;
}

const textsSchema = z.object({
  texts: z.array(z.string()).min(1),
  model: z.string().optional(),
});

const EMBED_MODELS: Record<string, { dim: number; embed: (texts: string[]) => number[][] }> = {
  [EMBED_MODEL_ID]: { dim: EMBED_DIM, embed: embedBatch },
};

export function createApp(options: AppOptions = {}): Sidecar {
  const maxBatch = options.maxBatch ?? 256;
  const app = express();
  app.use(express.json({ limit: "4mb" }));

  let loaded = false;
  // models are in-process tables; the loading gate still exists so the
  // lifecycle matches heavier model backends
  const load = options.load ?? (() => Promise.resolve());
  const ready = load().then(() => {
    loaded = true;
  });

  app.get("/v1/health", (_req, res) => {
    if (!loaded) {
      res.status(503).json({ status: "loading", models: {} });
      return;
    }
    res.json({
      status: "ok",
      models: {
        embed: { id: EMBED_MODEL_ID, dim: EMBED_DIM },
        parse: { id: PARSE_MODEL_ID },
      },
    });
  });

  app.post("/v1/embed", (req, res) => {
    if (!loaded) {
      res.status(503).json({ error: "models are loading" });
      return;
    }
    const parsed = textsSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: "texts must be a non-empty array of strings" });
      return;
    }
    const { texts, model } = parsed.data;
    if (texts.length > maxBatch) {
      res.status(413).json({ error: `batch too large: ${texts.length} > ${maxBatch}` });
      return;
    }
    const modelId = model ?? EMBED_MODEL_ID;
    const backend = EMBED_MODELS[modelId];
    if (!backend) {
      res.status(400).json({ error: `unknown model '${modelId}'` });
      return;
    }
    res.json({ model: modelId, dim: backend.dim, vectors: backend.embed(texts) });
  });

  app.post("/v1/parse", (req, res) => {
    if (!loaded) {
      res.status(503).json({ error: "models are loading" });
      return;
    }
    const parsed = textsSchema.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: "texts must be a non-empty array of strings" });
      return;
    }
    if (parsed.data.texts.length > maxBatch) {
      res.status(413).json({ error: `batch too large: ${parsed.data.texts.length} > ${maxBatch}` });
      return;
    }
    res.json({ model: PARSE_MODEL_ID, parses: parseBatch(parsed.data.texts) });
  });

  return { app, ready };
}
