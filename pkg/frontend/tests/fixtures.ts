// Server-document fixtures. Shapes mirror the live service responses for
// the bundled investigation walkthrough (9-node opening web, the focal's
// seven-day path, quarantine alerts).

import { AlertDoc, CaseDoc, GeoJsonDoc } from "../src/api.js";

export const FOCAL = "1234567890";

export function table2Case(): CaseDoc {
  const counterparts: Array<[string, string, string, number, number]> = [
    // label, id, status, out, in — tallies as the server reports them
    ["B", "14141414141", "Unknown", 2, 1],
    ["C", "15151515151", "Unknown", 0, 2],
    ["D", "17171717171", "Unknown", 1, 1],
    ["E", "18181818181", "Unknown", 2, 0],
    ["F", "19191919191", "Unknown", 0, 1],
    ["G", "12121212121", "Unknown", 0, 1],
    ["H", "16161616161", "Unknown", 0, 1],
    ["I", "13131313131", "Unknown", 1, 0],
  ];
  return {
    schema: "epitrace.case/1",
    case_id: "cs1",
    index: FOCAL,
    web: {
      nodes: [
        { id: FOCAL, status: "Patient", label: "A" },
        ...counterparts.map(([label, id, status]) => ({ id, status, label })),
      ],
      edges: counterparts.map(([, id, , out, inc]) => ({
        a: FOCAL,
        b: id,
        out,
        in: inc,
        first: "2020-05-01 12:35:56",
        last: "2020-05-07 19:12:40",
        sms: 0,
        kind: "call" as const,
      })),
    },
    pending_cdra: [],
    cdra_done: [FOCAL],
    closed: true,
    test_log: [],
    audit: [],
  };
}

export function emptyCase(): CaseDoc {
  return {
    schema: "epitrace.case/1",
    case_id: "empty",
    index: FOCAL,
    web: {
      nodes: [{ id: FOCAL, status: "Patient", label: "A" }],
      edges: [],
    },
    pending_cdra: [],
    cdra_done: [],
    closed: true,
    test_log: [],
    audit: [],
  };
}

export function table2Path(): GeoJsonDoc {
  const waypoints: Array<[string, number, number]> = [
    ["Plot # 2, Rawalpindi", 33.5026, 73.1965],
    ["Plot # 1, Islamabad", 33.65647, 73.0367],
    ["Street 24, Islamabad", 33.7077, 73.0498],
    ["Plot # 6, Islamabad", 33.6844, 72.98836],
    ["Sector H-8, Islamabad", 33.6701, 73.0593],
    ["Plot # 9, Rawalpindi", 33.6007, 73.0679],
    ["Plot # 10, Rawalpindi", 33.6261, 73.0712],
    ["Street 5, Islamabad", 33.7215, 73.0433],
    ["Plot # 3, Islamabad", 33.6953, 73.0076],
    ["Sector G-9, Islamabad", 33.6896, 73.0338],
  ];
  return {
    type: "FeatureCollection",
    features: [
      {
        type: "Feature",
        geometry: {
          type: "LineString",
          coordinates: waypoints.map(([, lat, lon]) => [lon, lat]),
        },
        properties: { role: "path", subscriber_paths: 1 },
      },
      ...waypoints.map(([site, lat, lon], order) => ({
        type: "Feature" as const,
        geometry: { type: "Point", coordinates: [lon, lat] },
        properties: {
          role: "waypoint",
          order,
          cell_site: site,
          arrived: "2020-05-01 12:35:56",
          departed: "2020-05-01 12:35:56",
        },
      })),
    ],
  };
}

export function alertDoc(seq: number): AlertDoc {
  return {
    seq,
    kind: "quarantine-violation",
    subscriber: "17171717171",
    at: `2020-05-10 09:${String(seq % 60).padStart(2, "0")}:00`,
    distance_m: 2200.5 + seq,
    radius_m: 500,
    center: [33.6844, 73.0479],
  };
}
