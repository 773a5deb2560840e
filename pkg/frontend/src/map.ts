/** Top-down mission map plus a depth strip chart, drawn on 2D canvases.
 * Missions are planar, so depth gets its own strip rather than a third
 * axis. */

import { ConsoleViewModel } from "./viewmodel.js";

interface Bounds {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

export function fitBounds(points: Array<[number, number]>, pad = 20): Bounds {
  if (!points.length) return { minX: -pad, maxX: pad, minY: -pad, maxY: pad };
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const [x, y] of points) {
    minX = Math.min(minX, x);
    maxX = Math.max(maxX, x);
    minY = Math.min(minY, y);
    maxY = Math.max(maxY, y);
  }
  return { minX: minX - pad, maxX: maxX + pad, minY: minY - pad, maxY: maxY + pad };
}

export function project(
  bounds: Bounds, width: number, height: number, x: number, y: number,
): [number, number] {
  const sx = width / (bounds.maxX - bounds.minX);
  const sy = height / (bounds.maxY - bounds.minY);
  const s = Math.min(sx, sy);
  // y grows north; canvas y grows down
  return [(x - bounds.minX) * s, height - (y - bounds.minY) * s];
}

export class MapView {
  constructor(private canvas: HTMLCanvasElement, private strip: HTMLCanvasElement) {}

  render(vm: ConsoleViewModel): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#0b1c2c";
    ctx.fillRect(0, 0, width, height);

    const pts: Array<[number, number]> = [
      ...vm.predicted.map((p): [number, number] => [p[0], p[1]]),
      ...vm.track.map((c): [number, number] => [c.x_m, c.y_m]),
      ...vm.truth.map((p): [number, number] => [p[0], p[1]]),
    ];
    const bounds = fitBounds(pts);
    const px = (x: number, y: number) => project(bounds, width, height, x, y);

    // predicted (mirror) track: the center's dead-reckoned expectation
    ctx.strokeStyle = "#3f88c5";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    vm.predicted.forEach((p, i) => {
      const [x, y] = px(p[0], p[1]);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();

    // sim truth, faint (only available because the gateway streams ticks)
    ctx.strokeStyle = "rgba(200,200,200,0.25)";
    ctx.lineWidth = 1;
    ctx.beginPath();
    vm.truth.forEach((p, i) => {
      const [x, y] = px(p[0], p[1]);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();

    // reported checkpoints
    ctx.fillStyle = "#ffd166";
    for (const c of vm.track) {
      const [x, y] = px(c.x_m, c.y_m);
      ctx.beginPath();
      ctx.arc(x, y, 4, 0, Math.PI * 2);
      ctx.fill();
    }

    // alert markers at the last reported position
    ctx.fillStyle = "#ef476f";
    if (vm.track.length && vm.alertFeed().length) {
      const c = vm.track[vm.track.length - 1];
      const [x, y] = px(c.x_m, c.y_m);
      for (let i = 0; i < vm.alertFeed().length; i++) {
        ctx.fillRect(x - 3 + 8 * i, y - 12, 6, 6);
      }
    }

    // current true position marker
    if (vm.lastTick) {
      const [x, y] = px(vm.lastTick.pose[0], vm.lastTick.pose[1]);
      ctx.strokeStyle = "#06d6a0";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(x, y, 6, 0, Math.PI * 2);
      ctx.stroke();
    }

    this.renderStrip(vm);
  }

  private renderStrip(vm: ConsoleViewModel): void {
    const ctx = this.strip.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.strip;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#0b1c2c";
    ctx.fillRect(0, 0, width, height);
    const series = vm.depthSeries();
    if (!series.length) return;
    const maxZ = Math.max(...series.map(([, z]) => z), 1);
    ctx.strokeStyle = "#3f88c5";
    ctx.beginPath();
    series.forEach(([i, z], idx) => {
      const x = (i / Math.max(1, series.length - 1)) * width;
      const y = (z / maxZ) * (height - 10) + 5;
      idx ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
  }
}
