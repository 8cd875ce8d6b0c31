"""Smoke test for the isd_twin extension module.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math
from pathlib import Path

import isd_twin as isd

DATA = Path(__file__).resolve().parent.parent / "data" / "static_three_region.csv"


def check(name, ok, detail=""):
    print(f"{'ok  ' if ok else 'FAIL'} {name} {detail}")
    return ok


def main():
    results = []
    cfg = isd.Config()
    results.append(check("config hash", len(cfg.hash()) == 64, cfg.hash()[:12]))
    results.append(check("config seed override", isd.Config("seed = 5").seed == 5))
    try:
        isd.Config("static.bogus = 1")
        results.append(check("unknown key rejected", False))
    except ValueError:
        results.append(check("unknown key rejected", True))

    v = isd.static_voltage(cfg, 5e3)
    results.append(check("static voltage finite", math.isfinite(v) and v > 0, f"{v:.4f} V"))
    results.append(check("dynamic voltage monotone", isd.dynamic_voltage(cfg, 2e4) > isd.dynamic_voltage(cfg, 1e4)))

    rows = [line.split(",") for line in DATA.read_text().splitlines()[1:] if line]
    p = [float(r[0]) * 1e3 for r in rows]
    u = [float(r[1]) for r in rows]
    fit = isd.fit_piecewise(p, u, 3)
    want = [2.6e-3, 0.7e-3, 0.2e-3]
    close = all(abs(g - w) / w < 0.05 for g, w in zip(fit.slopes_v_per_pa, want))
    results.append(check("piecewise slopes", close, [f"{s * 1e3:.3f}" for s in fit.slopes_v_per_pa]))

    k = 2e-4
    ps = [200.0 * i for i in range(1, 60)]
    efit = isd.fit_exponential(ps, [3.0 * (1 - math.exp(-k * x)) for x in ps])
    results.append(check("exponential fit", abs(efit.k_per_pa - k) / k < 1e-6, f"k={efit.k_per_pa:.6e}"))

    pressure = isd.generate(cfg, kind="square", frequency_hz=0.5, duration_s=6.0)
    results.append(check("generate", pressure.channel == "pressure_pa" and len(pressure) > 0, repr(pressure)))
    dc, ac = isd.simulate(cfg, pressure)
    results.append(check("simulate", len(dc) == len(ac) == len(pressure)))
    shaped = isd.shape_pulse(cfg, ac)
    results.append(check("shape pulse", len(shaped) == len(ac)))
    step_dc, _ = isd.simulate(cfg, isd.generate(cfg, kind="square", frequency_hz=0.5, duration_s=3.0))
    rise, fall = isd.response_times(step_dc)
    results.append(check("response times", rise > 0 and fall > 0, f"{rise:.1f}/{fall:.1f} ms"))

    events = isd.classify(cfg, dc, ac)
    plateaus = [e for e in events if e.kind == "static_plateau"]
    results.append(check("classify", len(plateaus) == 3, repr(events[:2])))
    commands, trajectory = isd.run_control(cfg, dc, events)
    results.append(check("control", len(commands) > 0 and len(trajectory) > 0, f"{len(commands)} commands"))

    stored = isd.harvest(cfg).samples[-1]
    results.append(check("harvest", abs(stored - 14.105454545) < 1e-6, f"{stored:.4f} V"))

    failed = results.count(False)
    print(f"{len(results) - failed} of {len(results)} checks passed")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
