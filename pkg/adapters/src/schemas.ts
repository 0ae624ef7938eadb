/**
 * Loader for the shared wire-protocol schemas.
 *
 * The JSON files shipped inside the Python package are the single source
 * of truth; this module reads the same files rather than keeping a copy,
 * so the two implementations cannot drift. Deployments that relocate the
 * schemas point VIDEOGROUND_SCHEMA_DIR at the directory.
 */
import { readFileSync } from 'fs';
import * as path from 'path';
import Ajv2020, { ValidateFunction } from 'ajv/dist/2020';

import { SERVICE_NAMES, ServiceName } from './config';

function defaultSchemaDir(): string {
  // adapters/{src,dist}/schemas.* -> repo root -> the python package's data.
  return path.resolve(__dirname, '..', '..', 'src', 'videoground', 'gateway', 'schemas');
}

export function schemaDir(): string {
  return process.env.VIDEOGROUND_SCHEMA_DIR || defaultSchemaDir();
}

export interface ServiceSchema {
  request: object;
  response: object;
}

const ajv = new Ajv2020({ allErrors: true });
const schemaCache = new Map<ServiceName, ServiceSchema>();
const validatorCache = new Map<string, ValidateFunction>();

export function loadSchema(name: ServiceName): ServiceSchema {
  const cached = schemaCache.get(name);
  if (cached) return cached;
  if (!(SERVICE_NAMES as readonly string[]).includes(name)) {
    throw new Error(`unknown service name ${JSON.stringify(name)}`);
  }
  const file = path.join(schemaDir(), `${name}.json`);
  const doc = JSON.parse(readFileSync(file, 'utf8'));
  const schema: ServiceSchema = {
    request: doc.properties.request,
    response: doc.properties.response,
  };
  schemaCache.set(name, schema);
  return schema;
}

function validator(name: ServiceName, side: 'request' | 'response'): ValidateFunction {
  const key = `${name}:${side}`;
  let v = validatorCache.get(key);
  if (!v) {
    v = ajv.compile(loadSchema(name)[side]);
    validatorCache.set(key, v);
  }
  return v;
}

/** Returns null when valid, otherwise a one-line description of the errors. */
export function validateRequest(name: ServiceName, payload: unknown): string | null {
  const v = validator(name, 'request');
  return v(payload) ? null : ajv.errorsText(v.errors);
}

export function validateResponse(name: ServiceName, payload: unknown): string | null {
  const v = validator(name, 'response');
  return v(payload) ? null : ajv.errorsText(v.errors);
}
