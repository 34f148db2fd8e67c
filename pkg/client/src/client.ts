/**
 * Wire client: connects to a harness endpoint, handshakes per episode, and
 * answers planning requests with a pluggable strategy callback (the place a
 * real model inference call would go).
 */

import * as net from "node:net";

import { OracleParams, SceneFrame, formatAnswer, planPairs, STOP_ANSWER } from "./oracle.js";
import { Route, StopLine, lightArcs } from "./route.js";

export const PROTOCOL_VERSION = 1;

export interface EpisodeConfig {
  dt: number;
  waypoint_spacing: number;
  attention_prefix: boolean;
  planner_cadence: number;
  deadline_ms: number;
  route: ConstructorParameters<typeof Route>[0];
  lights: StopLine[];
  oracle: OracleParams;
}

export interface RequestRecord {
  type: "request";
  episode_id: string;
  tick: number;
  prompt: string;
  scene: { frames: SceneFrame[] };
  deadline_ms: number;
}

interface EpisodeState {
  id: string;
  route: Route;
  arcs: Map<string, number>;
  config: EpisodeConfig;
}

/** request + episode context -> answer text */
export type Strategy = (request: RequestRecord, episode: EpisodeState) => string;

export function echoOracleStrategy(request: RequestRecord, episode: EpisodeState): string {
  const frames = request.scene.frames;
  const frame = frames[frames.length - 1];
  return formatAnswer(planPairs(episode.config.oracle, episode.route, frame, episode.arcs));
}

export function stopStrategy(): string {
  return STOP_ANSWER;
}

export const STRATEGIES: Record<string, Strategy> = {
  "echo-oracle": echoOracleStrategy,
  stop: stopStrategy,
};

export class VersionMismatch extends Error {}
export class ConnectionLost extends Error {}

export interface SessionOptions {
  host: string;
  port: number;
  strategy: Strategy;
  protocolVersion?: number;
  /** test hook: sleep this long before every response */
  delayMs?: number;
  log?: (line: string) => void;
}

export interface SessionSummary {
  episodes: number;
  served: number;
  failures: number;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/**
 * Serve one harness session to completion. Resolves with a summary when the
 * harness sends session_end or closes the socket after an episode boundary;
 * rejects with VersionMismatch or ConnectionLost otherwise.
 */
export function connectAndServe(options: SessionOptions): Promise<SessionSummary> {
  const log = options.log ?? (() => undefined);
  const version = options.protocolVersion ?? PROTOCOL_VERSION;
  const summary: SessionSummary = { episodes: 0, served: 0, failures: 0 };

  return new Promise((resolve, reject) => {
    const socket = net.connect({ host: options.host, port: options.port });
    socket.setNoDelay(true);
    let buffer = "";
    let episode: EpisodeState | null = null;
    let inEpisode = false;
    let done = false;
    let queue = Promise.resolve();

    const finish = (error?: Error) => {
      if (done) return;
      done = true;
      socket.destroy();
      if (error) reject(error);
      else resolve(summary);
    };

    const send = (record: unknown) => {
      socket.write(JSON.stringify(record) + "\n");
    };

    const handle = async (record: Record<string, unknown>) => {
      switch (record.type) {
        case "handshake": {
          const serverVersion = record.protocol_version as number;
          if (serverVersion !== version) {
            send({ type: "hello", protocol_version: version, episode_id: record.episode_id });
            finish(new VersionMismatch(
              `server speaks protocol ${serverVersion}, client speaks ${version}`));
            return;
          }
          const config = record.config as unknown as EpisodeConfig;
          const route = new Route(config.route);
          episode = {
            id: record.episode_id as string,
            route,
            arcs: lightArcs(route, config.lights),
            config,
          };
          inEpisode = true;
          summary.episodes += 1;
          send({ type: "hello", protocol_version: version, episode_id: episode.id });
          log(`episode ${episode.id}: handshake ok`);
          break;
        }
        case "request": {
          const request = record as unknown as RequestRecord;
          if (options.delayMs && options.delayMs > 0) {
            await sleep(options.delayMs);
          }
          let text = "";
          if (episode !== null) {
            try {
              text = options.strategy(request, episode);
            } catch (err) {
              // degrade to a well-formed empty answer; the harness applies
              // its own fallback policy
              summary.failures += 1;
              log(`request tick ${request.tick}: strategy failed: ${err}`);
              text = "";
            }
          }
          send({ type: "response", episode_id: request.episode_id, tick: request.tick, text });
          summary.served += 1;
          break;
        }
        case "episode_end": {
          inEpisode = false;
          episode = null;
          break;
        }
        case "session_end": {
          finish();
          break;
        }
        case "error": {
          finish(new ConnectionLost(`server error: ${record.error}`));
          break;
        }
        default:
          log(`ignoring unknown record type ${String(record.type)}`);
      }
    };

    socket.on("data", (chunk) => {
      buffer += chunk.toString("utf-8");
      let idx = buffer.indexOf("\n");
      while (idx >= 0) {
        const line = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 1);
        if (line.trim().length > 0) {
          const record = JSON.parse(line) as Record<string, unknown>;
          // strictly sequential: chain onto the previous record's completion
          queue = queue.then(() => handle(record));
        }
        idx = buffer.indexOf("\n");
      }
    });

    socket.on("error", (err) => {
      queue = queue.then(() => finish(new ConnectionLost(String(err))));
    });

    socket.on("close", () => {
      queue = queue.then(() => {
        if (inEpisode) {
          finish(new ConnectionLost("socket closed mid-episode"));
        } else {
          finish();
        }
      });
    });
  });
}
