//! The `--help-formats` text: the complete on-disk contract.

pub const FORMATS_HELP: &str = r#"kgli file formats
=================

All CSV floats are written in shortest-roundtrip form; identical runs
reproduce files byte for byte. Every command writes a `run.json` manifest
with the resolved config, seed, inputs, outputs, wall clock, and diagnostics.

Field files (`*.csv` + sidecar `*.json`)
  header: axis0,axis1[,axis2,axis3],re[,im]
  One row per grid point in lexicographic index order; coordinates are the
  cell centers (axis 0 is x^0 = c t). Real fields carry only `re`.
  The sidecar holds the grid:
    { "dims": 1, "extents": [..], "points": [..], "spacing": [..],
      "periodic": true, "origin": [..] }

Event files (`events.csv`)
  header: n,j,k0[,k1,k2]
  `n` is the 1-based event ordinal, `j` the time-bin index, `k*` the
  space-bin indices.

Dataset files (`dataset.csv` + sidecar `dataset.json`)
  header: j,k0[,k1,k2],count
  One row per bin over the full box in lexicographic order.
  The sidecar holds { "N": .., "config": { delta_t, delta_s, j_max, k_max,
  repetitions } }.

Worldlines (`*.csv`)
  header: tau,x0,x1[,x2,x3],u0,u1[,u2,u3]

Minimizer traces (`trace.csv`)
  header: iter,F,grad_norm,step

Run configs (JSON, one per subcommand)
  solve:    { "grid": {"points", "length", "origin"},
              "params": {"c","hbar","m","q"},
              "potentials": {"phi": SPEC, "ax": SPEC},
              "initial": INITIAL, "steps": N,
              "dt": t | "cfl": 0.9, "record_every": r,
              "write_levels": true }
            SPEC: {"kind":"zero"} | {"kind":"constant","value":v}
                | {"kind":"cosine","amplitude":a,"mode":n,"phase":p}
                | {"kind":"file","path":..}
            INITIAL: {"kind":"plane_wave","mode":n}
                   | {"kind":"packet","carrier_mode":n,"sigma":s,"center":x}
                   | {"kind":"modes","components":[{"amplitude","mode","branch"}..]}
                   | {"kind":"file","level0":..,"level1":..}
            Outputs: history.csv(+json), level_XXXXXX.csv (optional),
            diagnostics.json, run.json.
  sample:   { "field": path, "n": N, "seed": s, "c": 1.0 }
            Accepts a real density field or a complex field (density |phi|^2).
            Outputs: events.csv, dataset.csv(+json), run.json.
  analyze:  { "dataset": path | "events": path + "detector": {..},
              "model": MODEL, "theta": t,
              "epsilons": [..], "robust": false }
            MODEL: {"kind":"time_shift","density":path,"theta0":t0}
                 | {"kind":"two_bin"}
                 | {"kind":"exp_family","a":[..],"b":[..],"c":[..]}
            For time_shift, theta/epsilon are in the x^0 = ct units of the
            density grid and must be integer multiples of its time spacing.
            Outputs: evidence.json, evidence.csv, run.json.
  verify:   { "suite": "identity|hje|gauge|scale|dispersion|continuity",
              "grid": 32, "seed": 0 }
            Outputs: report.json, run.json. Exit 0 iff every check passes.
  minimize: { "grid": 32, "lambda": l, "spatial_mode": 1,
              "perturbation": 0.05, "seed": s, "max_iters": .., "grad_tol": ..,
              "f_target_rel": 1e-4 }
            Outputs: density.csv(+json), action.csv(+json), trace.csv,
            summary.json, run.json.

Environment
  KGLI_THREADS caps the data-parallel thread pool.
"#;
