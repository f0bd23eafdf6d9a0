import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    testTimeout: 60_000,
    hookTimeout: 120_000,
    // contract tests share one fixture service; run files sequentially
    fileParallelism: false,
  },
});
