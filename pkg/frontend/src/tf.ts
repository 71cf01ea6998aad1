/**
 * Opacity-curve editor model over a fixed set of colormaps.
 *
 * Control points keep x strictly increasing with pinned 0 and 1
 * endpoints; degenerate edits clamp inside the widget so the server
 * never sees an invalid transfer function. The full point list is sent
 * on gesture release.
 */

export interface TfPoint {
  x: number;
  a: number;
}

export interface TfMessage {
  type: "tf";
  points: { x: number; rgb: [number, number, number]; a: number }[];
}

const X_GAP = 1e-4;

export type ColormapName = "grayscale" | "viridis_like" | "warm";

const COLORMAPS: Record<ColormapName, (x: number) => [number, number, number]> = {
  grayscale: (x) => [x, x, x],
  viridis_like: (x) => [0.28 + 0.6 * x * x, 0.05 + 0.85 * x, 0.35 + 0.45 * (1 - x) * (1 - x)],
  warm: (x) => [Math.min(1, 0.2 + 1.2 * x), 0.05 + 0.75 * x * x, 0.1 + 0.25 * x],
};

export class TfEditor {
  points: TfPoint[];
  colormap: ColormapName;

  constructor(points?: TfPoint[], colormap: ColormapName = "warm") {
    this.points = points ? points.map((p) => ({ ...p })) : [
      { x: 0, a: 0 },
      { x: 1, a: 0.8 },
    ];
    this.colormap = colormap;
  }

  /** Insert a point; x clamps strictly between its neighbors. Returns the index. */
  addPoint(x: number, a: number): number {
    const clampedA = Math.min(1, Math.max(0, a));
    let i = this.points.findIndex((p) => p.x >= x);
    if (i <= 0) i = 1;
    if (i >= this.points.length) i = this.points.length - 1;
    const lo = this.points[i - 1].x + X_GAP;
    const hi = this.points[i].x - X_GAP;
    const cx = Math.min(hi, Math.max(lo, x));
    this.points.splice(i, 0, { x: cx, a: clampedA });
    return i;
  }

  /** Move a point; endpoint x values are pinned, interior x clamps to neighbors. */
  movePoint(index: number, x: number, a: number): void {
    const p = this.points[index];
    if (!p) throw new Error(`no control point ${index}`);
    p.a = Math.min(1, Math.max(0, a));
    if (index === 0 || index === this.points.length - 1) {
      return; // endpoints stay at x=0 and x=1
    }
    const lo = this.points[index - 1].x + X_GAP;
    const hi = this.points[index + 1].x - X_GAP;
    p.x = Math.min(hi, Math.max(lo, x));
  }

  /** Delete an interior point; endpoints are permanent. */
  deletePoint(index: number): void {
    if (index === 0 || index === this.points.length - 1) return;
    this.points.splice(index, 1);
  }

  deleteInterior(): void {
    this.points = [this.points[0], this.points[this.points.length - 1]];
  }

  setAllOpacity(a: number): void {
    for (const p of this.points) p.a = a;
  }

  opacityAt(x: number): number {
    const pts = this.points;
    if (x <= pts[0].x) return pts[0].a;
    for (let i = 1; i < pts.length; i++) {
      if (x <= pts[i].x) {
        const t = (x - pts[i - 1].x) / (pts[i].x - pts[i - 1].x);
        return pts[i - 1].a + t * (pts[i].a - pts[i - 1].a);
      }
    }
    return pts[pts.length - 1].a;
  }

  toMessage(): TfMessage {
    const map = COLORMAPS[this.colormap];
    return {
      type: "tf",
      points: this.points.map((p) => ({ x: p.x, rgb: map(p.x), a: p.a })),
    };
  }
}
