// Map panel: patient paths as polylines over a plain projected canvas.
// Waypoint markers carry their popup text in <title>; publishing an
// advisory is gated behind a confirmation dialog and restyles the layer.

import { GeoJsonDoc } from "./api.js";
import { PathLayer } from "./state.js";

const WIDTH = 560;
const HEIGHT = 400;
const MARGIN = 24;

type LonLat = [number, number];

function collectPoints(geojson: GeoJsonDoc): LonLat[] {
  const points: LonLat[] = [];
  if (!Array.isArray(geojson.features)) throw new Error("features missing");
  for (const feature of geojson.features) {
    const geometry = feature.geometry;
    if (!geometry || typeof geometry.type !== "string") {
      throw new Error("geometry missing");
    }
    if (geometry.type === "Point") {
      points.push(geometry.coordinates as LonLat);
    } else if (geometry.type === "LineString") {
      points.push(...(geometry.coordinates as LonLat[]));
    }
  }
  for (const [lon, lat] of points) {
    if (typeof lon !== "number" || typeof lat !== "number") {
      throw new Error("bad coordinate pair");
    }
  }
  return points;
}

// equirectangular fit of every layer into the panel; lat axis flipped so
// north is up
export function makeProjector(layers: PathLayer[]): (p: LonLat) => { x: number; y: number } {
  const all: LonLat[] = layers.flatMap((layer) => collectPoints(layer.geojson));
  let [minLon, maxLon, minLat, maxLat] = [Infinity, -Infinity, Infinity, -Infinity];
  for (const [lon, lat] of all) {
    minLon = Math.min(minLon, lon); maxLon = Math.max(maxLon, lon);
    minLat = Math.min(minLat, lat); maxLat = Math.max(maxLat, lat);
  }
  const lonSpan = maxLon - minLon || 1;
  const latSpan = maxLat - minLat || 1;
  return ([lon, lat]) => ({
    x: MARGIN + ((lon - minLon) / lonSpan) * (WIDTH - 2 * MARGIN),
    y: HEIGHT - MARGIN - ((lat - minLat) / latSpan) * (HEIGHT - 2 * MARGIN),
  });
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [name, value] of Object.entries(attrs)) el.setAttribute(name, value);
  return el;
}

function layerGroup(
  layer: PathLayer,
  project: (p: LonLat) => { x: number; y: number },
): SVGGElement {
  const group = svgEl("g", {
    class: `path-layer${layer.advisoryPublished ? " advisory" : ""}`,
    "data-subscriber": layer.subscriber,
  });
  for (const feature of layer.geojson.features) {
    if (feature.geometry.type === "LineString") {
      const points = (feature.geometry.coordinates as LonLat[])
        .map(project)
        .map((p) => `${p.x},${p.y}`)
        .join(" ");
      group.appendChild(
        svgEl("polyline", {
          points,
          fill: "none",
          stroke: layer.advisoryPublished ? "#2e7d32" : "#c62828",
          "stroke-width": "2",
        }),
      );
    } else if (feature.geometry.type === "Point") {
      const { x, y } = project(feature.geometry.coordinates as LonLat);
      const marker = svgEl("circle", { cx: String(x), cy: String(y), r: "5", class: "waypoint" });
      const props = feature.properties;
      const title = svgEl("title", {});
      title.textContent =
        `${props.cell_site ?? "?"}\n${props.arrived ?? ""} .. ${props.departed ?? ""}`;
      marker.appendChild(title);
      group.appendChild(marker);
    }
  }
  return group;
}

export function renderMapPanel(
  container: HTMLElement,
  layers: PathLayer[],
  onPublish: (subscriber: string) => void,
  confirmFn: (message: string) => boolean = (m) => window.confirm(m),
): void {
  container.textContent = "";

  if (layers.length === 0) {
    const hint = document.createElement("p");
    hint.className = "map-hint";
    hint.textContent = "No paths yet — attach a patient's CDR to see their movements.";
    container.appendChild(hint);
    return;
  }

  const drawable: PathLayer[] = [];
  for (const layer of layers) {
    try {
      collectPoints(layer.geojson);
      drawable.push(layer);
    } catch (err) {
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent =
        `Path for ${layer.subscriber} could not be drawn: ${(err as Error).message}`;
      container.appendChild(banner);
    }
  }

  if (drawable.length) {
    const svg = svgEl("svg", {
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: String(WIDTH),
      height: String(HEIGHT),
      class: "path-map",
    });
    const project = makeProjector(drawable);
    for (const layer of drawable) svg.appendChild(layerGroup(layer, project));
    container.appendChild(svg);
  }

  for (const layer of drawable) {
    const row = document.createElement("div");
    row.className = "layer-row";
    const swatch = document.createElement("span");
    swatch.textContent = layer.advisoryPublished
      ? `${layer.subscriber} — public advisory`
      : layer.subscriber;
    row.appendChild(swatch);
    const publish = document.createElement("button");
    publish.dataset.action = "publish-advisory";
    publish.dataset.subscriber = layer.subscriber;
    publish.textContent = "publish advisory";
    publish.disabled = layer.advisoryPublished;
    publish.addEventListener("click", () => {
      if (confirmFn(`Publish ${layer.subscriber}'s path as a public advisory?`)) {
        onPublish(layer.subscriber);
      }
    });
    row.appendChild(publish);
    container.appendChild(row);
  }
}
