//! Runs the ten acceptance criteria and prints one line per criterion.

use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::Value;
use spinweil_core::pipeline::{rank_oracle, SixfoldPipeline};
use spinweil_core::fourier::Transforms;
use spinweil_core::report::{run_preset, Report, Status};
use spinweil_core::weil::{sixfold, WeilStructure, PRESETS};
use spinweil_core::Rational;

struct Outcome {
    ok: bool,
    detail: String,
}

fn passed(r: &Report, names: &[&str]) -> Result<(), String> {
    for n in names {
        match r.check(n) {
            Some(c) if c.status == Status::Pass => {}
            Some(c) => return Err(format!("{} {n} failed: {}", r.instance.preset.as_deref().unwrap_or("?"), c.witness)),
            None => return Err(format!("{n} missing")),
        }
    }
    Ok(())
}

fn witness<'a>(r: &'a Report, name: &str) -> &'a Value {
    &r.check(name).expect("check present").witness
}

fn timed(budget: Duration, f: impl FnOnce() -> Result<String, String>) -> Outcome {
    let start = Instant::now();
    let res = f();
    let took = start.elapsed();
    match res {
        Ok(d) if took <= budget => Outcome { ok: true, detail: format!("{d} ({:.2?})", took) },
        Ok(d) => Outcome { ok: false, detail: format!("{d}, but took {:.2?} > {:.0?}", took, budget) },
        Err(e) => Outcome { ok: false, detail: e },
    }
}

fn c1() -> Outcome {
    timed(Duration::from_secs(1), || {
        let r = run_preset("sixfold-q2", 0, Some("clifford.relations")).map_err(|e| e.to_string())?;
        passed(&r, &["clifford.relations"])?;
        Ok(format!("{} generator pairs, n = 1, 2, 3", witness(&r, "clifford.relations")["generator_pairs"]))
    })
}

fn c2() -> Outcome {
    timed(Duration::from_secs(5), || {
        for p in PRESETS {
            let r = run_preset(p, 0, Some("spinor.exp_pure")).map_err(|e| e.to_string())?;
            passed(&r, &["spinor.exp_pure"])?;
            if witness(&r, "spinor.exp_pure")["dim_w_cap_iota_w"] != 0 {
                return Err(format!("{p}: W meets ι(W)"));
            }
        }
        Ok(format!("{} presets", PRESETS.len()))
    })
}

fn c3() -> Outcome {
    timed(Duration::from_secs(60), || {
        // (B, BB_1, HW, Ξ(K_-)) for the sixfold and the fourfold
        let expected = [("sixfold-q2", [2, 2, 2, 1]), ("fourfold-rm2", [4, 8, 4, 2])];
        let mut out = Vec::new();
        for (p, want) in expected {
            let r = run_preset(p, 0, Some("dims.ledger")).map_err(|e| e.to_string())?;
            passed(&r, &["dims.ledger"])?;
            let w = witness(&r, "dims.ledger");
            let got = [&w["dim_B"], &w["dim_BB1"], &w["dim_HW"], &w["dim_Xi"]].map(|v| v.as_u64().unwrap_or(0));
            if got != want {
                return Err(format!("{p}: got {got:?}, expected {want:?}"));
            }
            out.push(format!("{p} {got:?}"));
        }
        Ok(out.join(", "))
    })
}

fn c4() -> Outcome {
    timed(Duration::from_secs(120), || {
        let names = ["weil.eta", "forms.xi", "forms.hermitian", "forms.split"];
        for p in PRESETS {
            for seed in [1u64, 2] {
                let r = run_preset(p, seed, Some("forms.")).map_err(|e| e.to_string())?;
                passed(&r, &names[1..])?;
                let w = witness(&r, "forms.split");
                if w["dim_K_Z"].as_u64().map(|x| 2 * x) != w["d"].as_u64() {
                    return Err(format!("{p}: dim_K Z = {}", w["dim_K_Z"]));
                }
            }
            let r = run_preset(p, 0, Some("weil.eta")).map_err(|e| e.to_string())?;
            passed(&r, &names[..1])?;
        }
        Ok("all presets, seeds 1 and 2".into())
    })
}

fn c5() -> Outcome {
    timed(Duration::from_secs(600), || {
        let r = run_preset("sixfold-q2", 0, Some("invariants.algebra")).map_err(|e| e.to_string())?;
        passed(&r, &["invariants.algebra"])?;
        Ok(format!("invariant dims {}", witness(&r, "invariants.algebra")["invariant_dims"]))
    })
}

fn c6() -> Outcome {
    timed(Duration::from_secs(300), || {
        let r = run_preset("sixfold-q2", 6, Some("fm.")).map_err(|e| e.to_string())?;
        passed(&r, &["fm.mukai", "fm.equivariance"])?;
        let w = witness(&r, "fm.equivariance");
        if w["n1_basis_elements"] != 6 || w["random_n"] != 3 || w["random_samples"].as_u64() < Some(20) {
            return Err(format!("coverage {w}"));
        }
        Ok(format!("6 basis ξ at n = 1, {} random ξ at n = 3, Mukai at n = 1, 2", w["random_samples"]))
    })
}

fn c7() -> Outcome {
    timed(Duration::from_secs(300), || {
        let mut pairs = 0;
        for p in ["sixfold-q2", "fourfold-rm2"] {
            let r = run_preset(p, 0, Some("lemma.")).map_err(|e| e.to_string())?;
            passed(&r, &["lemma.filtration", "lemma.pi_bb1"])?;
            pairs += witness(&r, "lemma.filtration").as_array().map_or(0, |a| a.len());
        }
        Ok(format!("{pairs} CM-type pairs, Π(BB_1) = HW"))
    })
}

fn c8() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (q, want) in [(2i64, 16i64), (3, 24), (5, 40)] {
        let o = timed(Duration::from_secs(60), || {
            let w = WeilStructure::build(&sixfold(q)).map_err(|e| e.to_string())?;
            let t = Transforms::new(w.space).map_err(|e| e.to_string())?;
            let p = SixfoldPipeline::new(&w, &t).map_err(|e| e.to_string())?;
            let r = p.run().map_err(|e| e.to_string())?;
            let abs = if r.rank_g < Rational::from_integer(0.into()) { -r.rank_g.clone() } else { r.rank_g.clone() };
            let want = Rational::from_integer(want.into());
            let oracle = rank_oracle(&p.f2.ch, &p.f1.ch);
            if abs == want && oracle == want {
                Ok(format!("q={q}: {abs}"))
            } else {
                Err(format!("q={q}: rank {} oracle {oracle}, expected {want}", r.rank_g))
            }
        });
        ok &= o.ok;
        parts.push(o.detail);
    }
    Outcome { ok, detail: parts.join("; ") }
}

fn c9() -> Outcome {
    timed(Duration::from_secs(300), || {
        let r = run_preset("sixfold-q2", 0, Some("kappa.")).map_err(|e| e.to_string())?;
        passed(&r, &["kappa.invariance", "kappa.decomposition"])?;
        let w = witness(&r, "kappa.decomposition");
        Ok(format!("γ coords {}, δ coords {}", w["gamma_coords"], w["delta_coords"]))
    })
}

fn c10() -> Outcome {
    timed(Duration::from_secs(120), || {
        let dir = std::env::temp_dir();
        let mut outs = Vec::new();
        for i in 0..2 {
            let path = dir.join(format!("spinweil-acceptance-{}-{i}.json", std::process::id()));
            let st = Command::new(env!("CARGO_BIN_EXE_verify"))
                .args(["--preset", "sixfold-q2", "--seed", "7", "--out"])
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?;
            if st.status.code() != Some(0) {
                return Err(format!("exit {:?}", st.status.code()));
            }
            outs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
            let _ = std::fs::remove_file(&path);
        }
        if outs[0] == outs[1] {
            Ok(format!("{} identical bytes", outs[0].len()))
        } else {
            Err("reports differ".into())
        }
    })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 Clifford relations", c1),
        ("2 pure spinor exp(√-qΘ)", c2),
        ("3 dimension ledger", c3),
        ("4 forms", c4),
        ("5 invariant algebra", c5),
        ("6 equivariance and Mukai", c6),
        ("7 filtration lemma and Π", c7),
        ("8 rank 8q", c8),
        ("9 κ and γ ≠ 0", c9),
        ("10 determinism", c10),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let o = f();
        println!("{} criterion {name}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
