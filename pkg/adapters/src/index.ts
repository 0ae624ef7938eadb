export {
  AdapterConfig,
  DEFAULT_MODELS,
  SERVICE_NAMES,
  ServiceName,
  enabledServices,
  isServiceName,
  loadConfig,
} from './config';
export { createApp, serve } from './server';
export { BackendError, Handler, buildBackends } from './backends';
export { loadSchema, schemaDir, validateRequest, validateResponse } from './schemas';
export { extractChunks, stripLeadingDeterminers, defaultLexicon } from './chunking';
export { deriveSeed, hashBytes, hashUnitVector, stableU64, unitDraw } from './seeding';
