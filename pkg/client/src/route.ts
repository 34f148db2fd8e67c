/**
 * Route geometry over the handshake payload.
 *
 * Every operation here mirrors the harness arithmetic operation for
 * operation (+, -, *, /, sqrt and comparisons only), so results are
 * bit-identical on both ends of the wire for the same serialized inputs.
 */

export interface RouteData {
  id: string;
  vertices: [number, number][];
  speed_limit: number;
  target_spacing?: number;
}

export interface StopLine {
  id: string;
  stop_line: [[number, number], [number, number]];
}

export class Route {
  readonly vertices: [number, number][];
  readonly speedLimit: number;
  readonly segLengths: number[];
  readonly cumLengths: number[];

  constructor(data: RouteData) {
    if (data.vertices.length < 2) {
      throw new Error(`route ${data.id}: needs at least 2 vertices`);
    }
    this.vertices = data.vertices;
    this.speedLimit = data.speed_limit;
    this.segLengths = [];
    this.cumLengths = [0.0];
    for (let i = 0; i + 1 < data.vertices.length; i++) {
      const [ax, ay] = data.vertices[i];
      const [bx, by] = data.vertices[i + 1];
      const dx = bx - ax;
      const dy = by - ay;
      const length = Math.sqrt(dx * dx + dy * dy);
      if (length === 0) {
        throw new Error(`route ${data.id}: consecutive vertices must be distinct`);
      }
      this.segLengths.push(length);
      this.cumLengths.push(this.cumLengths[this.cumLengths.length - 1] + length);
    }
  }

  get length(): number {
    return this.cumLengths[this.cumLengths.length - 1];
  }

  /** Arc length of the nearest route point; ties keep the smaller arc. */
  projectArc(x: number, y: number): number {
    let bestD2 = Infinity;
    let bestS = 0.0;
    for (let i = 0; i < this.segLengths.length; i++) {
      const segLen = this.segLengths[i];
      const [ax, ay] = this.vertices[i];
      const [bx, by] = this.vertices[i + 1];
      const dx = bx - ax;
      const dy = by - ay;
      let t = ((x - ax) * dx + (y - ay) * dy) / (segLen * segLen);
      if (t < 0.0) {
        t = 0.0;
      } else if (t > 1.0) {
        t = 1.0;
      }
      const qx = ax + t * dx;
      const qy = ay + t * dy;
      const ex = x - qx;
      const ey = y - qy;
      const d2 = ex * ex + ey * ey;
      if (d2 < bestD2) {
        bestD2 = d2;
        bestS = this.cumLengths[i] + t * segLen;
      }
    }
    return bestS;
  }

  /** World point at arc s, extrapolating past the route end. */
  pointAtArc(s: number): [number, number] {
    if (s <= 0.0) {
      return this.vertices[0];
    }
    const total = this.length;
    if (s >= total) {
      const [lx, ly] = this.vertices[this.vertices.length - 1];
      const [ax, ay] = this.vertices[this.vertices.length - 2];
      const segLen = this.segLengths[this.segLengths.length - 1];
      const ux = (lx - ax) / segLen;
      const uy = (ly - ay) / segLen;
      const extra = s - total;
      return [lx + extra * ux, ly + extra * uy];
    }
    let i = 0;
    while (this.cumLengths[i + 1] < s) {
      i += 1;
    }
    const [ax, ay] = this.vertices[i];
    const [bx, by] = this.vertices[i + 1];
    const t = (s - this.cumLengths[i]) / this.segLengths[i];
    return [ax + t * (bx - ax), ay + t * (by - ay)];
  }

  /** Arc where a stop line crosses the route, or null. */
  stopLineArc(line: [[number, number], [number, number]]): number | null {
    const [[l1x, l1y], [l2x, l2y]] = line;
    const sx = l2x - l1x;
    const sy = l2y - l1y;
    for (let i = 0; i < this.segLengths.length; i++) {
      const [ax, ay] = this.vertices[i];
      const [bx, by] = this.vertices[i + 1];
      const rx = bx - ax;
      const ry = by - ay;
      const denom = rx * sy - ry * sx;
      if (denom === 0.0) {
        continue;
      }
      const wx = l1x - ax;
      const wy = l1y - ay;
      const t = (wx * sy - wy * sx) / denom;
      const u = (wx * ry - wy * rx) / denom;
      if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) {
        return this.cumLengths[i] + t * this.segLengths[i];
      }
    }
    return null;
  }
}

export function lightArcs(route: Route, lights: StopLine[]): Map<string, number> {
  const arcs = new Map<string, number>();
  for (const light of lights) {
    const arc = route.stopLineArc(light.stop_line);
    if (arc !== null) {
      arcs.set(light.id, arc);
    }
  }
  return arcs;
}
