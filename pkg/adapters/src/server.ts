/**
 * Single-process HTTP service exposing every enabled backend as
 * POST /{service}, per the shared wire protocol. Requests are validated
 * against the shared schemas before a backend runs; responses are
 * validated before they leave, so a buggy backend can never emit a
 * payload the other side of the wire would reject.
 */
import express, { Express, NextFunction, Request, Response } from 'express';
import type { Server } from 'http';

import { AdapterConfig, ServiceName, enabledServices, isServiceName } from './config';
import { BackendError, Handler, buildBackends } from './backends';
import { validateRequest, validateResponse } from './schemas';

export function createApp(
  config: AdapterConfig,
  backends?: Partial<Record<ServiceName, Handler>>
): Express {
  const enabled = new Set<ServiceName>(enabledServices(config));
  const handlers: Record<ServiceName, Handler> = { ...buildBackends(config), ...backends };

  const app = express();
  app.use(express.json({ limit: '8mb' }));

  app.get('/health', (_req: Request, res: Response) => {
    res.json({
      status: 'ok',
      services: enabledServices(config),
      models: config.models,
      device: config.device,
    });
  });

  app.post('/:service', (req: Request, res: Response) => {
    const param = req.params.service;
    const name = Array.isArray(param) ? param.join('/') : param;
    if (!isServiceName(name) || !enabled.has(name)) {
      res.status(404).json({ error: `no service ${JSON.stringify(name)} on this adapter` });
      return;
    }
    const requestError = validateRequest(name, req.body);
    if (requestError !== null) {
      res.status(400).json({ error: `invalid ${name} request: ${requestError}` });
      return;
    }
    let payload: unknown;
    try {
      payload = handlers[name](req.body);
    } catch (err) {
      const message = err instanceof Error ? err.message : String(err);
      const status = err instanceof BackendError ? 422 : 500;
      res.status(status).json({ error: `${name} backend failed: ${message}` });
      return;
    }
    const responseError = validateResponse(name, payload);
    if (responseError !== null) {
      // Defensive: a reference backend violating its own schema is a bug here.
      res.status(500).json({ error: `invalid ${name} response: ${responseError}` });
      return;
    }
    res.json(payload);
  });

  // Body-parser failures (malformed JSON, oversize payloads) land here.
  app.use((err: unknown, _req: Request, res: Response, next: NextFunction) => {
    if (res.headersSent) {
      next(err);
      return;
    }
    const status = (err as { status?: number }).status ?? 400;
    const message = err instanceof Error ? err.message : 'bad request';
    res.status(status).json({ error: message });
  });

  return app;
}

/** Start the adapter service on the configured port. */
export function serve(config: AdapterConfig): Server {
  const app = createApp(config);
  const server = app.listen(config.port, () => {
    const names = enabledServices(config).join(', ');
    console.log(`adapter service on :${config.port} (device=${config.device}) serving ${names}`);
  });
  return server;
}
