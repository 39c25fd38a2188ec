import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    // The integration test builds a view with the python CLI and boots the
    // real service, which takes a few seconds.
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
