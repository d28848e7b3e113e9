import { configFromEnv } from "./config.js";
import { createServer } from "./server.js";

const config = configFromEnv();
const server = createServer(config);
server.listen(config.port, config.host, () => {
  const addr = server.address();
  const where = typeof addr === "object" && addr !== null
    ? `${addr.address}:${addr.port}`
    : String(addr);
  console.log(`sandbox-runner listening on ${where}`);
});

for (const signal of ["SIGINT", "SIGTERM"] as const) {
  process.on(signal, () => {
    server.close(() => process.exit(0));
  });
}
