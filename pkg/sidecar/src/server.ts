/**
 * Generation sidecar: implements the wire protocol over node:http.
 *
 * Endpoints (all POST, JSON bodies):
 *   /v1/categories  {domain, prompt, count}        -> {names}
 *   /v1/generate    {prompt, seed, steps?}         -> {png_base64}
 *   /v1/remove-bg   {png_base64}                   -> {png_base64} (RGBA)
 *   /v1/relight     {png_base64, prompt, seed}     -> {png_base64}
 * plus GET /healthz -> 200 "ok".
 *
 * Errors are non-2xx with {"error": {"code", "message"}} bodies and the
 * stable codes BAD_REQUEST, GENERATION_FAILED, MODEL_LOAD. Requests are
 * serialized per endpoint (generation models are not reentrant) behind a
 * bounded queue; overflow answers 503.
 *
 * In mock mode the handlers are the deterministic mock models, which
 * reproduce the workbench's in-process mocks bit-for-bit. In real mode
 * each endpoint proxies to a configured upstream model service, passing
 * the body through untouched except for defaulting a missing `steps`
 * field: prompts are never rewritten server-side.
 */

import * as http from "node:http";
import { mockCategories, mockGenerate, mockRelight, mockRemoveBg } from "./mock";
import { PngError } from "./png";

export interface SidecarConfig {
  mode: "mock" | "real";
  defaultSteps: number;
  /** Upstream base URL per endpoint (real mode). */
  upstreams?: Partial<Record<EndpointName, string>>;
  /** Maximum queued requests per endpoint before 503. */
  queueDepth?: number;
  /** Test hook: artificial per-request latency in ms. */
  artificialDelayMs?: number;
}

export type EndpointName = "categories" | "generate" | "remove-bg" | "relight";

export const ENDPOINTS: Record<string, EndpointName> = {
  "/v1/categories": "categories",
  "/v1/generate": "generate",
  "/v1/remove-bg": "remove-bg",
  "/v1/relight": "relight",
};

const MAX_BODY_BYTES = 32 * 1024 * 1024;

export class RequestError extends Error {
  constructor(
    public status: number,
    public code: "BAD_REQUEST" | "GENERATION_FAILED" | "MODEL_LOAD",
    message: string
  ) {
    super(message);
  }
}

function badRequest(message: string): RequestError {
  return new RequestError(400, "BAD_REQUEST", message);
}

// --- request validation ------------------------------------------------------

function requireString(body: Record<string, unknown>, field: string): string {
  const value = body[field];
  if (typeof value !== "string" || value.length === 0) {
    throw badRequest(`field '${field}' must be a non-empty string`);
  }
  return value;
}

function requireInteger(body: Record<string, unknown>, field: string): number {
  const value = body[field];
  if (typeof value !== "number" || !Number.isSafeInteger(value)) {
    throw badRequest(`field '${field}' must be an integer`);
  }
  return value;
}

function optionalSteps(body: Record<string, unknown>, fallback: number): number {
  if (body.steps === undefined) {
    return fallback;
  }
  const steps = requireInteger(body, "steps");
  if (steps < 1) {
    throw badRequest("field 'steps' must be >= 1");
  }
  return steps;
}

function decodeBase64(body: Record<string, unknown>, field: string): Buffer {
  const encoded = requireString(body, field);
  if (!/^[A-Za-z0-9+/]*={0,2}$/.test(encoded) || encoded.length % 4 !== 0) {
    throw badRequest(`field '${field}' is not valid base64`);
  }
  return Buffer.from(encoded, "base64");
}

// --- mock handlers -----------------------------------------------------------

type Handler = (body: Record<string, unknown>) => Promise<unknown>;

function mockHandlers(config: SidecarConfig): Record<EndpointName, Handler> {
  return {
    categories: async (body) => {
      const domain = requireString(body, "domain");
      requireString(body, "prompt");
      const count = requireInteger(body, "count");
      if (count < 1) {
        throw badRequest("field 'count' must be >= 1");
      }
      return { names: mockCategories(domain, count) };
    },
    generate: async (body) => {
      const prompt = requireString(body, "prompt");
      const seed = BigInt(requireInteger(body, "seed"));
      const steps = optionalSteps(body, config.defaultSteps);
      const png = mockGenerate(prompt, seed, steps);
      return { png_base64: png.toString("base64") };
    },
    "remove-bg": async (body) => {
      const png = decodeBase64(body, "png_base64");
      try {
        return { png_base64: mockRemoveBg(png).toString("base64") };
      } catch (err) {
        if (err instanceof PngError) {
          throw badRequest(`png_base64: ${err.message}`);
        }
        throw err;
      }
    },
    relight: async (body) => {
      const png = decodeBase64(body, "png_base64");
      const prompt = requireString(body, "prompt");
      const seed = BigInt(requireInteger(body, "seed"));
      try {
        return { png_base64: mockRelight(png, prompt, seed).toString("base64") };
      } catch (err) {
        if (err instanceof PngError) {
          throw badRequest(`png_base64: ${err.message}`);
        }
        throw err;
      }
    },
  };
}

// --- real-mode proxy handlers -------------------------------------------------

function proxyHandlers(config: SidecarConfig): Record<EndpointName, Handler> {
  const make = (endpoint: EndpointName): Handler => {
    return async (body) => {
      const base = config.upstreams?.[endpoint];
      if (!base) {
        throw new RequestError(500, "MODEL_LOAD", `no upstream configured for ${endpoint}`);
      }
      const payload = { ...body };
      if (endpoint === "generate" && payload.steps === undefined) {
        payload.steps = config.defaultSteps;
      }
      let response: Response;
      try {
        response = await fetch(`${base.replace(/\/$/, "")}/v1/${endpoint}`, {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(payload),
        });
      } catch (err) {
        throw new RequestError(
          502,
          "GENERATION_FAILED",
          `upstream ${endpoint} unreachable: ${(err as Error).message}`
        );
      }
      const text = await response.text();
      if (!response.ok) {
        throw new RequestError(
          502,
          "GENERATION_FAILED",
          `upstream ${endpoint} answered ${response.status}: ${text.slice(0, 200)}`
        );
      }
      try {
        return JSON.parse(text);
      } catch {
        throw new RequestError(502, "GENERATION_FAILED", `upstream ${endpoint} sent invalid JSON`);
      }
    };
  };
  return {
    categories: make("categories"),
    generate: make("generate"),
    "remove-bg": make("remove-bg"),
    relight: make("relight"),
  };
}

/** Checks that every configured upstream answers /healthz. */
export async function checkUpstreams(config: SidecarConfig): Promise<void> {
  const bases = new Set(Object.values(config.upstreams ?? {}));
  if (bases.size === 0) {
    throw new RequestError(500, "MODEL_LOAD", "real mode needs at least one upstream URL");
  }
  for (const base of bases) {
    try {
      const response = await fetch(`${base.replace(/\/$/, "")}/healthz`);
      if (!response.ok) {
        throw new Error(`status ${response.status}`);
      }
    } catch (err) {
      throw new RequestError(
        500,
        "MODEL_LOAD",
        `upstream ${base} failed health check: ${(err as Error).message}`
      );
    }
  }
}

// --- queueing ----------------------------------------------------------------

class EndpointQueue {
  private pending = 0;
  private chain: Promise<unknown> = Promise.resolve();

  constructor(private readonly depth: number) {}

  run<T>(task: () => Promise<T>): Promise<T> {
    if (this.pending >= this.depth) {
      return Promise.reject(
        new RequestError(503, "GENERATION_FAILED", "endpoint queue full, retry later")
      );
    }
    this.pending += 1;
    const result = this.chain.then(task).finally(() => {
      this.pending -= 1;
    });
    this.chain = result.catch(() => undefined);
    return result;
  }
}

// --- server ------------------------------------------------------------------

function sendJson(res: http.ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "content-type": "application/json; charset=utf-8",
    "content-length": Buffer.byteLength(body),
  });
  res.end(body);
}

function sendError(res: http.ServerResponse, err: RequestError): void {
  sendJson(res, err.status, { error: { code: err.code, message: err.message } });
}

function readBody(req: http.IncomingMessage): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > MAX_BODY_BYTES) {
        reject(badRequest("request body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

export function createServer(config: SidecarConfig): http.Server {
  const handlers = config.mode === "mock" ? mockHandlers(config) : proxyHandlers(config);
  const depth = config.queueDepth ?? 8;
  const queues: Record<EndpointName, EndpointQueue> = {
    categories: new EndpointQueue(depth),
    generate: new EndpointQueue(depth),
    "remove-bg": new EndpointQueue(depth),
    relight: new EndpointQueue(depth),
  };

  return http.createServer(async (req, res) => {
    try {
      const url = (req.url ?? "").split("?")[0];
      if (req.method === "GET" && url === "/healthz") {
        res.writeHead(200, { "content-type": "text/plain; charset=utf-8" });
        res.end("ok");
        return;
      }
      const endpoint = ENDPOINTS[url];
      if (!endpoint) {
        throw new RequestError(404, "BAD_REQUEST", `no such endpoint: ${url}`);
      }
      if (req.method !== "POST") {
        throw new RequestError(405, "BAD_REQUEST", `${endpoint} accepts POST only`);
      }
      const raw = await readBody(req);
      let body: unknown;
      try {
        body = JSON.parse(raw.toString("utf8"));
      } catch {
        throw badRequest("body is not valid JSON");
      }
      if (typeof body !== "object" || body === null || Array.isArray(body)) {
        throw badRequest("body must be a JSON object");
      }
      const result = await queues[endpoint].run(async () => {
        if (config.artificialDelayMs) {
          await new Promise((r) => setTimeout(r, config.artificialDelayMs));
        }
        return handlers[endpoint](body as Record<string, unknown>);
      });
      sendJson(res, 200, result);
    } catch (err) {
      if (err instanceof RequestError) {
        sendError(res, err);
      } else {
        sendError(
          res,
          new RequestError(500, "GENERATION_FAILED", `internal error: ${(err as Error).message}`)
        );
      }
    }
  });
}
