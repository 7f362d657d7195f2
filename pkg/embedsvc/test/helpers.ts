import { AddressInfo } from "node:net";
import { Server } from "node:http";

import { Sidecar, createApp } from "../src/app.js";

export interface RunningSidecar {
  endpoint: string;
  close: () => Promise<void>;
}

export async function startSidecar(maxBatch = 256): Promise<RunningSidecar> {
  const sidecar: Sidecar = createApp({ maxBatch });
  await sidecar.ready;
  const server: Server = await new Promise((resolve) => {
    const s = sidecar.app.listen(0, "127.0.0.1", () => resolve(s));
  });
  const { port } = server.address() as AddressInfo;
  return {
    endpoint: `http://127.0.0.1:${port}`,
    close: () => new Promise((resolve) => server.close(() => resolve())),
  };
}

export async function postJson(endpoint: string, path: string, body: unknown) {
  const resp = await fetch(`${endpoint}${path}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: resp.status, body: await resp.json().catch(() => ({})) };
}
