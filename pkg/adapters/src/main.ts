import { readFileSync } from 'fs';

import { loadConfig } from './config';
import { serve } from './server';

// Usage: node dist/main.js [config.json]
const configPath = process.argv[2];
const raw = configPath ? JSON.parse(readFileSync(configPath, 'utf8')) : {};
serve(loadConfig(raw));
