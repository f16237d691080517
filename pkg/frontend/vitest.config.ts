import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // Every call shells out to the Python CLI, so tests are interpreter-bound.
    testTimeout: 300_000,
  },
});
