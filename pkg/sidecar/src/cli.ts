/**
 * Sidecar entry point.
 *
 *   node dist/cli.js --mode mock --port 8876
 *   node dist/cli.js --mode real --port 8876 --steps 1 \
 *       --upstream http://models.internal:9000
 *
 * Real mode wraps model services: each endpoint proxies to its upstream
 * (a shared --upstream base, overridable per endpoint), and startup fails
 * with a MODEL_LOAD error unless every upstream passes its health check.
 */

import { EndpointName, SidecarConfig, checkUpstreams, createServer } from "./server";

interface CliOptions {
  mode: "mock" | "real";
  port: number;
  steps: number;
  upstream?: string;
  perEndpoint: Partial<Record<EndpointName, string>>;
}

function parseArgs(argv: string[]): CliOptions {
  const options: CliOptions = { mode: "mock", port: 8876, steps: 1, perEndpoint: {} };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const next = () => {
      const value = argv[++i];
      if (value === undefined) {
        throw new Error(`flag ${flag} needs a value`);
      }
      return value;
    };
    switch (flag) {
      case "--mode": {
        const mode = next();
        if (mode !== "mock" && mode !== "real") {
          throw new Error("--mode must be 'mock' or 'real'");
        }
        options.mode = mode;
        break;
      }
      case "--port":
        options.port = Number(next());
        break;
      case "--steps":
        options.steps = Number(next());
        break;
      case "--upstream":
        options.upstream = next();
        break;
      case "--upstream-categories":
        options.perEndpoint.categories = next();
        break;
      case "--upstream-generate":
        options.perEndpoint.generate = next();
        break;
      case "--upstream-remove-bg":
        options.perEndpoint["remove-bg"] = next();
        break;
      case "--upstream-relight":
        options.perEndpoint.relight = next();
        break;
      case "--help":
        console.log(
          "usage: sidecar --mode {mock|real} [--port N] [--steps N] " +
            "[--upstream URL] [--upstream-<endpoint> URL]"
        );
        process.exit(0);
        break;
      default:
        throw new Error(`unknown flag: ${flag}`);
    }
  }
  if (!Number.isInteger(options.port) || options.port < 0 || options.port > 65535) {
    throw new Error("--port must be a valid port number");
  }
  if (!Number.isInteger(options.steps) || options.steps < 1) {
    throw new Error("--steps must be an integer >= 1");
  }
  return options;
}

async function main(): Promise<void> {
  const options = parseArgs(process.argv.slice(2));
  const endpoints: EndpointName[] = ["categories", "generate", "remove-bg", "relight"];
  const upstreams: Partial<Record<EndpointName, string>> = {};
  for (const endpoint of endpoints) {
    const url = options.perEndpoint[endpoint] ?? options.upstream;
    if (url) {
      upstreams[endpoint] = url;
    }
  }
  const config: SidecarConfig = {
    mode: options.mode,
    defaultSteps: options.steps,
    upstreams: options.mode === "real" ? upstreams : undefined,
  };
  if (config.mode === "real") {
    await checkUpstreams(config);
  }
  const server = createServer(config);
  server.listen(options.port, () => {
    const address = server.address();
    const port = typeof address === "object" && address ? address.port : options.port;
    console.log(`sidecar listening on :${port} (mode=${config.mode}, steps=${config.defaultSteps})`);
  });
}

main().catch((err) => {
  console.error(`startup failed: ${err.message ?? err}`);
  process.exit(1);
});
