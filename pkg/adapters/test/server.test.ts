import type { AddressInfo } from 'net';
import type { Server } from 'http';
import { afterEach, describe, expect, it } from 'vitest';

import { loadConfig } from '../src/config';
import { BackendError, Handler } from '../src/backends';
import { createApp } from '../src/server';

const FRAME = { index: 1, uri: 'frames/vid-a/1.png', width: 640, height: 360 };

let server: Server | undefined;

async function start(raw: object = {}, backends?: Record<string, Handler>): Promise<string> {
  const app = createApp(loadConfig(raw), backends);
  server = app.listen(0);
  await new Promise<void>((resolve) => server!.once('listening', resolve));
  const { port } = server!.address() as AddressInfo;
  return `http://127.0.0.1:${port}`;
}

afterEach(async () => {
  if (server) {
    await new Promise((resolve) => server!.close(resolve));
    server = undefined;
  }
});

async function postJSON(base: string, path: string, body: unknown): Promise<Response> {
  return fetch(`${base}${path}`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
  });
}

describe('health endpoint', () => {
  it('reports the enabled service names', async () => {
    const base = await start({ models: { caption: 'blip2', embed: 'dinov2' }, device: 'cuda:0' });
    const res = await fetch(`${base}/health`);
    expect(res.status).toBe(200);
    const body = await res.json();
    expect(body.status).toBe('ok');
    expect(body.services).toEqual(['caption', 'embed']);
    expect(body.models).toEqual({ caption: 'blip2', embed: 'dinov2' });
    expect(body.device).toBe('cuda:0');
  });
});

describe('routing', () => {
  it('404s a service name outside the gateway set', async () => {
    const base = await start();
    const res = await postJSON(base, '/upscale', {});
    expect(res.status).toBe(404);
    const body = await res.json();
    expect(body.error).toContain('upscale');
  });

  it('404s an enabled-set miss even for a real gateway service', async () => {
    const base = await start({ models: { caption: 'blip2' } });
    const res = await postJSON(base, '/embed', { payload: 'x', space: 'dino' });
    expect(res.status).toBe(404);
    expect((await res.json()).error).toContain('embed');
  });

  it('400s a schema-invalid request with a JSON error body', async () => {
    const base = await start();
    const res = await postJSON(base, '/embed', { payload: 'x', space: 'notaspace' });
    expect(res.status).toBe(400);
    const body = await res.json();
    expect(body.error).toMatch(/invalid embed request/);
  });

  it('400s extra request properties (additionalProperties: false)', async () => {
    const base = await start();
    const res = await postJSON(base, '/caption', { frame: FRAME, extra: 1 });
    expect(res.status).toBe(400);
  });

  it('400s a malformed JSON body', async () => {
    const base = await start();
    const res = await fetch(`${base}/caption`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: '{not json',
    });
    expect(res.status).toBe(400);
    const body = await res.json();
    expect(typeof body.error).toBe('string');
  });
});

describe('backend failures', () => {
  it('maps a BackendError to 422 with a JSON error body', async () => {
    const failing: Handler = () => {
      throw new BackendError('frame decode failed');
    };
    const base = await start({}, { caption: failing });
    const res = await postJSON(base, '/caption', { frame: FRAME });
    expect(res.status).toBe(422);
    expect((await res.json()).error).toBe('caption backend failed: frame decode failed');
  });

  it('maps an unexpected throw to 500', async () => {
    const crashing: Handler = () => {
      throw new Error('cuda out of memory');
    };
    const base = await start({}, { embed: crashing });
    const res = await postJSON(base, '/embed', { payload: 'x', space: 'dino' });
    expect(res.status).toBe(500);
    expect((await res.json()).error).toContain('cuda out of memory');
  });

  it('refuses to emit a schema-invalid response', async () => {
    const buggy: Handler = () => ({ caption: '' }); // violates minLength 1
    const base = await start({}, { caption: buggy });
    const res = await postJSON(base, '/caption', { frame: FRAME });
    expect(res.status).toBe(500);
    expect((await res.json()).error).toMatch(/invalid caption response/);
  });
});
