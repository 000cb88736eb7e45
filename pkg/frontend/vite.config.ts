import { defineConfig } from 'vitest/config';

export default defineConfig({
  // relative asset paths: the built app is mounted at /ui by the service
  base: './',
  server: {
    // during development, proxy API calls to a locally running service
    proxy: {
      '/tickets': 'http://127.0.0.1:8787',
      '/events': 'http://127.0.0.1:8787',
      '/model': 'http://127.0.0.1:8787',
      '/healthz': 'http://127.0.0.1:8787',
    },
  },
  test: {
    environment: 'node',
  },
});
