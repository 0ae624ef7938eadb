/** Adapter service configuration and validation. */

/** The gateway's service set; route names and schema files share it. */
export const SERVICE_NAMES = [
  'caption',
  'noun_chunks',
  'detect',
  'track',
  'ocr',
  'motion',
  'aesthetic',
  'embed',
  'perceptual',
  'lm',
] as const;

export type ServiceName = (typeof SERVICE_NAMES)[number];

export function isServiceName(name: string): name is ServiceName {
  return (SERVICE_NAMES as readonly string[]).includes(name);
}

export interface AdapterConfig {
  /** TCP port the single-process service binds. */
  port: number;
  /** Enabled services and the model identifier backing each one. */
  models: Partial<Record<ServiceName, string>>;
  /** Device selector handed to model backends ("cpu", "cuda:0", ...). */
  device: string;
  /** Max requests a backend may batch together. */
  batchSize: number;
  /** Root seed for the deterministic reference backends. */
  seed: number;
}

export const DEFAULT_MODELS: Record<ServiceName, string> = {
  caption: 'reference/bigram-caption',
  noun_chunks: 'reference/lexicon-chunker',
  detect: 'reference/hash-detector',
  track: 'reference/constant-tracker',
  ocr: 'reference/zero-ocr',
  motion: 'reference/hash-motion',
  aesthetic: 'reference/hash-aesthetic',
  embed: 'reference/hash-embedding',
  perceptual: 'reference/hash-perceptual',
  lm: 'reference/bigram-lm',
};

const DEFAULTS = { port: 8760, device: 'cpu', batchSize: 1, seed: 0 };

/**
 * Parse and validate a plain config object (e.g. JSON.parse output).
 * Omitted fields take defaults; an omitted/empty model registry enables
 * every service with its reference backend.
 */
export function loadConfig(raw: unknown = {}): AdapterConfig {
  if (typeof raw !== 'object' || raw === null || Array.isArray(raw)) {
    throw new Error('config must be a JSON object');
  }
  const obj = raw as Record<string, unknown>;

  const port = obj.port === undefined ? DEFAULTS.port : obj.port;
  if (typeof port !== 'number' || !Number.isInteger(port) || port < 1 || port > 65535) {
    throw new Error(`port must be an integer in 1..65535, got ${JSON.stringify(port)}`);
  }

  const device = obj.device === undefined ? DEFAULTS.device : obj.device;
  if (typeof device !== 'string' || device.length === 0) {
    throw new Error('device must be a non-empty string');
  }

  const batchSize = obj.batchSize === undefined ? DEFAULTS.batchSize : obj.batchSize;
  if (typeof batchSize !== 'number' || !Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`batchSize must be a positive integer, got ${JSON.stringify(batchSize)}`);
  }

  const seed = obj.seed === undefined ? DEFAULTS.seed : obj.seed;
  if (typeof seed !== 'number' || !Number.isInteger(seed)) {
    throw new Error(`seed must be an integer, got ${JSON.stringify(seed)}`);
  }

  let models: Partial<Record<ServiceName, string>>;
  if (obj.models === undefined || (typeof obj.models === 'object' && obj.models !== null && Object.keys(obj.models).length === 0)) {
    models = { ...DEFAULT_MODELS };
  } else {
    if (typeof obj.models !== 'object' || obj.models === null || Array.isArray(obj.models)) {
      throw new Error('models must be an object mapping service name to model id');
    }
    models = {};
    for (const [name, modelId] of Object.entries(obj.models)) {
      // Invariant: every enabled service is one of the gateway's set.
      if (!isServiceName(name)) {
        throw new Error(`unknown service ${JSON.stringify(name)}; expected one of ${SERVICE_NAMES.join(', ')}`);
      }
      if (typeof modelId !== 'string' || modelId.length === 0) {
        throw new Error(`model id for ${name} must be a non-empty string`);
      }
      models[name] = modelId;
    }
  }

  return { port, models, device, batchSize, seed };
}

/** Service names enabled by the config, in canonical gateway order. */
export function enabledServices(config: AdapterConfig): ServiceName[] {
  return SERVICE_NAMES.filter((name) => config.models[name] !== undefined);
}
