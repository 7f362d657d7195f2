// Entry point: embedsvc [--port N] [--host H] [--max-batch N]

import { createApp } from "./app.js";

function flag(name: string, fallback: string): string {
  const idx = process.argv.indexOf(`--${name}`);
  return idx >= 0 && process.argv[idx + 1] ? process.argv[idx + 1] : fallback;
}

const port = Number(flag("port", "8040"));
const host = flag("host", "127.0.0.1");
const maxBatch = Number(flag("max-batch", "256"));

const { app } = createApp({ maxBatch });
app.listen(port, host, () => {
  console.log(`embedsvc listening on http://${host}:${port}`);
});
