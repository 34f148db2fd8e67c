import { parseArgs } from "node:util";

import { ConnectionLost, STRATEGIES, VersionMismatch, connectAndServe } from "./client.js";

function usage(): never {
  console.error(
    "usage: node dist/main.js --endpoint host:port " +
      "[--strategy echo-oracle|stop] [--delay-ms N] [--protocol-version N] [--quiet]",
  );
  process.exit(1);
}

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      endpoint: { type: "string" },
      strategy: { type: "string", default: "echo-oracle" },
      "delay-ms": { type: "string", default: "0" },
      "protocol-version": { type: "string" },
      quiet: { type: "boolean", default: false },
    },
  });
  if (!values.endpoint) {
    usage();
  }
  const [host, portText] = values.endpoint.split(":");
  const port = Number(portText);
  if (!host || !Number.isInteger(port) || port <= 0) {
    console.error(`bad endpoint: ${values.endpoint}`);
    return 1;
  }
  const strategy = STRATEGIES[values.strategy ?? "echo-oracle"];
  if (!strategy) {
    console.error(`unknown strategy ${values.strategy}; known: ${Object.keys(STRATEGIES).join(", ")}`);
    return 1;
  }
  const log = values.quiet ? () => undefined : (line: string) => console.error(line);
  try {
    const summary = await connectAndServe({
      host,
      port,
      strategy,
      delayMs: Number(values["delay-ms"]),
      protocolVersion: values["protocol-version"]
        ? Number(values["protocol-version"])
        : undefined,
      log,
    });
    console.error(
      `session done: ${summary.episodes} episodes, ${summary.served} requests, ` +
        `${summary.failures} strategy failures`,
    );
    return 0;
  } catch (err) {
    if (err instanceof VersionMismatch) {
      console.error(`version mismatch: ${err.message}`);
      return 3;
    }
    if (err instanceof ConnectionLost) {
      console.error(`connection lost: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(2);
  },
);
