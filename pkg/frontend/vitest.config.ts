import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the e2e test boots the real service and drives a full case through it
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
