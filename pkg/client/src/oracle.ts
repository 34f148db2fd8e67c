/**
 * The rule-based reference planner, recomputed client-side from the handshake
 * config and the latest scene frame. Mirrors the harness planner's arithmetic
 * exactly; see route.ts for the bit-exactness ground rules.
 */

import { formatPair } from "./format.js";
import { Route } from "./route.js";

export interface OracleParams {
  wp_dt: number;
  cruise_cap: number;
  accel: number;
  decel: number;
  light_lookahead: number;
  light_margin: number;
  hazard_range: number;
  hazard_margin: number;
  corridor_half_width: number;
  stop_floor: number;
  obey_lights: boolean;
  obey_npcs: boolean;
}

export interface SceneFrame {
  tick: number;
  ego: {
    x: number;
    y: number;
    yaw: number;
    cos_yaw: number;
    sin_yaw: number;
    speed: number;
  };
  npcs: { id: string; kind: string; x: number; y: number; yaw: number }[];
  lights: { id: string; phase: string }[];
}

export function planStopArc(
  cfg: OracleParams,
  s0: number,
  frame: SceneFrame,
  arcs: Map<string, number>,
): number {
  let stop = Infinity;
  if (cfg.obey_lights) {
    for (const light of frame.lights) {
      if (light.phase === "green") {
        continue;
      }
      const arc = arcs.get(light.id);
      if (arc === undefined || arc < s0) {
        continue;
      }
      if (arc - s0 <= cfg.light_lookahead) {
        const cand = arc - cfg.light_margin;
        if (cand < stop) {
          stop = cand;
        }
      }
    }
  }
  if (cfg.obey_npcs) {
    for (const npc of frame.npcs) {
      const x = npc.x;
      const y = npc.y;
      if (y > 0.0 && y <= cfg.hazard_range && Math.abs(x) <= cfg.corridor_half_width) {
        const cand = s0 + y - cfg.hazard_margin;
        if (cand < stop) {
          stop = cand;
        }
      }
    }
  }
  return stop;
}

export function planSpeeds(
  cfg: OracleParams,
  cruise: number,
  s0: number,
  speed: number,
  stopArc: number,
): number[] {
  const speeds: number[] = [];
  let s = s0;
  let v = speed;
  for (let k = 0; k < 5; k++) {
    let target = cruise;
    if (stopArc !== Infinity) {
      const rem = stopArc - s;
      let allowed: number;
      if (rem <= 0.0) {
        allowed = 0.0;
      } else {
        allowed = Math.sqrt(2.0 * cfg.decel * rem);
      }
      if (allowed < target) {
        target = allowed;
      }
    }
    if (v < target) {
      v = v + cfg.accel * cfg.wp_dt;
      if (v > target) {
        v = target;
      }
    } else {
      v = v - cfg.decel * cfg.wp_dt;
      if (v < target) {
        v = target;
      }
    }
    if (v < cfg.stop_floor) {
      v = 0.0;
    }
    s = s + v * cfg.wp_dt;
    speeds.push(v);
  }
  return speeds;
}

export function planPairs(
  cfg: OracleParams,
  route: Route,
  frame: SceneFrame,
  arcs: Map<string, number>,
): [number, number][] {
  const ego = frame.ego;
  const s0 = route.projectArc(ego.x, ego.y);
  const cruise = Math.min(route.speedLimit, cfg.cruise_cap);
  const stop = planStopArc(cfg, s0, frame, arcs);
  const speeds = planSpeeds(cfg, cruise, s0, ego.speed, stop);
  const pairs: [number, number][] = [];
  let s = s0;
  for (const v of speeds) {
    s = s + v * cfg.wp_dt;
    const [px, py] = route.pointAtArc(s);
    const rx = px - ego.x;
    const ry = py - ego.y;
    pairs.push([rx * ego.sin_yaw - ry * ego.cos_yaw, rx * ego.cos_yaw + ry * ego.sin_yaw]);
  }
  return pairs;
}

export function formatAnswer(pairs: [number, number][]): string {
  const rendered = pairs.map(([x, y]) => formatPair(x, y)).join(", ");
  return `The next five passing waypoints are ${rendered}.`;
}

export const STOP_ANSWER = formatAnswer([
  [0, 0],
  [0, 0],
  [0, 0],
  [0, 0],
  [0, 0],
]);
