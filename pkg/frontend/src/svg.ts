/**
 * Minimal SVG figure builder: linear axes, polylines, scatter points, and a
 * legend.  Figures are emitted as standalone vector files.
 */

export interface Extent {
  min: number;
  max: number;
}

export class LinearScale {
  constructor(
    readonly domain: Extent,
    readonly range: Extent,
  ) {}

  at(v: number): number {
    const { domain, range } = this;
    const span = domain.max - domain.min || 1;
    return range.min + ((v - domain.min) / span) * (range.max - range.min);
  }

  ticks(n = 6): number[] {
    const span = this.domain.max - this.domain.min;
    if (span <= 0) return [this.domain.min];
    const raw = span / n;
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => span / s <= n) ?? mag * 10;
    const start = Math.ceil(this.domain.min / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.domain.max + 1e-12; v += step) {
      out.push(Number(v.toFixed(12)));
    }
    return out;
  }
}

export function extent(values: number[], pad = 0): Extent {
  let min = Infinity;
  let max = -Infinity;
  for (const v of values) {
    if (v < min) min = v;
    if (v > max) max = v;
  }
  if (!isFinite(min)) {
    min = 0;
    max = 1;
  }
  if (min === max) {
    min -= 0.5;
    max += 0.5;
  }
  const span = max - min;
  return { min: min - pad * span, max: max + pad * span };
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Figure {
  private parts: string[] = [];
  readonly plot = { left: 60, top: 40, right: 20, bottom: 45 };

  constructor(
    readonly width = 760,
    readonly height = 480,
    readonly title = "",
  ) {}

  get plotWidth(): number {
    return this.width - this.plot.left - this.plot.right;
  }

  get plotHeight(): number {
    return this.height - this.plot.top - this.plot.bottom;
  }

  xScale(domain: Extent): LinearScale {
    return new LinearScale(domain, { min: this.plot.left, max: this.plot.left + this.plotWidth });
  }

  yScale(domain: Extent): LinearScale {
    return new LinearScale(domain, { min: this.plot.top + this.plotHeight, max: this.plot.top });
  }

  axes(x: LinearScale, y: LinearScale, xLabel: string, yLabel: string): void {
    const x0 = this.plot.left;
    const y0 = this.plot.top + this.plotHeight;
    const x1 = this.plot.left + this.plotWidth;
    const y1 = this.plot.top;
    this.parts.push(
      `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
      `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
    );
    for (const t of x.ticks()) {
      const px = x.at(t);
      this.parts.push(
        `<line x1="${px.toFixed(1)}" y1="${y0}" x2="${px.toFixed(1)}" y2="${y0 + 4}" stroke="black"/>`,
        `<text x="${px.toFixed(1)}" y="${y0 + 17}" font-size="11" text-anchor="middle">${t}</text>`,
      );
    }
    for (const t of y.ticks()) {
      const py = y.at(t);
      this.parts.push(
        `<line x1="${x0 - 4}" y1="${py.toFixed(1)}" x2="${x0}" y2="${py.toFixed(1)}" stroke="black"/>`,
        `<text x="${x0 - 7}" y="${(py + 3.5).toFixed(1)}" font-size="11" text-anchor="end">${t}</text>`,
      );
    }
    this.parts.push(
      `<text x="${x0 + this.plotWidth / 2}" y="${this.height - 8}" font-size="12" text-anchor="middle">${esc(xLabel)}</text>`,
      `<text x="16" y="${y1 + this.plotHeight / 2}" font-size="12" text-anchor="middle" transform="rotate(-90 16 ${y1 + this.plotHeight / 2})">${esc(yLabel)}</text>`,
    );
  }

  polyline(points: [number, number][], stroke: string, opts: { dashed?: boolean; cls?: string; width?: number } = {}): void {
    const attr = points.map(([a, b]) => `${a.toFixed(2)},${b.toFixed(2)}`).join(" ");
    const dash = opts.dashed ? ' stroke-dasharray="6,4"' : "";
    const cls = opts.cls ? ` class="${opts.cls}"` : "";
    this.parts.push(
      `<polyline${cls} points="${attr}" fill="none" stroke="${stroke}" stroke-width="${opts.width ?? 1.6}"${dash}/>`,
    );
  }

  circle(cx: number, cy: number, r: number, fill: string, cls = ""): void {
    const c = cls ? ` class="${cls}"` : "";
    this.parts.push(`<circle${c} cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" fill="${fill}"/>`);
  }

  vline(px: number, stroke: string): void {
    this.parts.push(
      `<line x1="${px.toFixed(1)}" y1="${this.plot.top}" x2="${px.toFixed(1)}" y2="${this.plot.top + this.plotHeight}" stroke="${stroke}" stroke-dasharray="4,4"/>`,
    );
  }

  rect(x: number, y: number, w: number, h: number, fill: string): void {
    this.parts.push(
      `<rect x="${x.toFixed(2)}" y="${y.toFixed(2)}" width="${w.toFixed(2)}" height="${h.toFixed(2)}" fill="${fill}"/>`,
    );
  }

  legend(entries: { label: string; color: string; dashed?: boolean }[]): void {
    const x = this.plot.left + 10;
    let y = this.plot.top + 14;
    for (const { label, color, dashed } of entries) {
      const dash = dashed ? ' stroke-dasharray="6,4"' : "";
      this.parts.push(
        `<line x1="${x}" y1="${y - 4}" x2="${x + 26}" y2="${y - 4}" stroke="${color}" stroke-width="2"${dash}/>`,
        `<text x="${x + 32}" y="${y}" font-size="11">${esc(label)}</text>`,
      );
      y += 16;
    }
  }

  text(x: number, y: number, value: string, size = 12, anchor = "start"): void {
    this.parts.push(`<text x="${x}" y="${y}" font-size="${size}" text-anchor="${anchor}">${esc(value)}</text>`);
  }

  render(): string {
    const title = this.title
      ? `<text x="${this.width / 2}" y="22" font-size="14" text-anchor="middle">${esc(this.title)}</text>`
      : "";
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">` +
      `<rect width="${this.width}" height="${this.height}" fill="white"/>` +
      title +
      this.parts.join("") +
      `</svg>`
    );
  }
}

/** Sequential dark-to-light color for a 0..1 progress value. */
export function progressColor(t: number): string {
  const clamp = Math.max(0, Math.min(1, t));
  const r = Math.round(10 + 120 * clamp);
  const g = Math.round(60 + 180 * clamp);
  const b = Math.round(30 + 90 * clamp);
  return `rgb(${r},${g},${b})`;
}

export const VARIANT_COLORS: Record<string, string> = {
  "STATEFUL-BASELINE": "#1f77b4",
  "STATELESS-BASELINE": "#ff7f0e",
  COMPR: "#2ca02c",
  REG: "#d62728",
  "COMPR&REG": "#9467bd",
};

export function variantColor(variant: string, index: number): string {
  return VARIANT_COLORS[variant] ?? ["#8c564b", "#e377c2", "#7f7f7f"][index % 3];
}
