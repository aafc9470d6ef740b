//! Acceptance suite: nine end-to-end criteria with independent oracles.
//! Runs without the test harness so that every criterion prints one line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use catmix::euclid::{decompose_primitive, IntVector2};
use catmix::growth::{
    reduce_small_c, rho_bar_kick_distance, rho_lower, rho_upper, split_parabolic,
    trace_certificate, trace_lyapunov, DEFAULT_LIP_CONST,
};
use catmix::mixing::{
    compose, correlation, min_expansion, zero_time, KickSource, KickedSystemSpec, Observable,
    ZeroTime,
};
use catmix::qmorph::{build_engine, EngineConfig, QmEngine};
use catmix::sl2core::{
    is_conjugate_to_inverse, prime_criterion, PrimeVerdict, UnimodularMatrix, DEFAULT_TRIAL_BOUND,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, u64);

fn m(a: i64, b: i64, c: i64, d: i64) -> UnimodularMatrix {
    UnimodularMatrix::from_i64(a, b, c, d).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn engine() -> QmEngine {
    build_engine(&m(4, 9, 7, 16), EngineConfig::default()).unwrap()
}

fn seeded_system(t: u32, seed: u64) -> KickedSystemSpec {
    KickedSystemSpec {
        h: m(4, 9, 7, 16),
        t,
        kicks: KickSource::default_alphabet(seed),
        trace_bound: 2,
    }
}

/// Random element as a word over S, T^{±1} and optionally h^{±1}.
fn random_word(rng: &mut ChaCha8Rng, len: usize, h: Option<&UnimodularMatrix>) -> UnimodularMatrix {
    let mut gens = vec![
        UnimodularMatrix::s(),
        UnimodularMatrix::upper(1),
        UnimodularMatrix::upper(-1),
    ];
    if let Some(h) = h {
        gens.push(h.clone());
        gens.push(h.inverse());
    }
    (0..len).fold(UnimodularMatrix::identity(), |acc, _| {
        &acc * &gens[rng.gen_range(0..gens.len())]
    })
}

type M2 = [i64; 4];

fn mul2(x: &M2, y: &M2) -> M2 {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

fn c1_conjugacy() -> Check {
    let golden = m(2, 1, 1, 1);
    let v = is_conjugate_to_inverse(&golden).map_err(|e| e.to_string())?;
    let w = v.witness.clone().ok_or("no witness for (2 1;1 1)")?;
    ensure(v.answer && w.conjugate(&golden) == golden.inverse(), || {
        "(2 1;1 1) witness fails".into()
    })?;
    let h = m(4, 9, 7, 16);
    ensure(
        !is_conjugate_to_inverse(&h)
            .map_err(|e| e.to_string())?
            .answer,
        || "(4 9;7 16) judged conjugate".into(),
    )?;
    let pc = prime_criterion(&h, DEFAULT_TRIAL_BOUND).map_err(|e| e.to_string())?;
    ensure(matches!(pc, PrimeVerdict::NotConjugate { .. }), || {
        format!("prime criterion gave {pc:?}")
    })?;

    // every unimodular matrix with entries bounded by R, as a conjugator pool
    const E: i64 = 12;
    const R: i64 = 40;
    let mut pool = Vec::new();
    for a in -R..=R {
        for b in -R..=R {
            for c in -R..=R {
                if a == 0 {
                    if b * c == -1 {
                        pool.extend((-R..=R).map(|d| [a, b, c, d]));
                    }
                } else if (1 + b * c) % a == 0 && ((1 + b * c) / a).abs() <= R {
                    pool.push([a, b, c, (1 + b * c) / a]);
                }
            }
        }
    }
    let (mut hyperbolic, mut negative, mut positive) = (0usize, 0usize, 0usize);
    for a in -E..=E {
        for b in -E..=E {
            for c in -E..=E {
                if a == 0 || (1 + b * c) % a != 0 {
                    continue;
                }
                let d = (1 + b * c) / a;
                if d.abs() > E || (a + d).abs() <= 2 {
                    continue;
                }
                hyperbolic += 1;
                let x = [a, b, c, d];
                let xi = [d, -b, -c, a];
                let verdict = is_conjugate_to_inverse(&m(a, b, c, d)).map_err(|e| e.to_string())?;
                if verdict.answer {
                    positive += 1;
                    let w = verdict.witness.ok_or("positive verdict without witness")?;
                    let w: Vec<i64> = w
                        .entries()
                        .iter()
                        .map(|e| i64::try_from(*e).unwrap())
                        .collect();
                    let w = [w[0], w[1], w[2], w[3]];
                    ensure(mul2(&w, &x) == mul2(&xi, &w), || {
                        format!("bad witness for {x:?}")
                    })?;
                } else {
                    negative += 1;
                    if let Some(g) = pool.iter().find(|g| mul2(g, &x) == mul2(&xi, g)) {
                        return Err(format!(
                            "{x:?} has conjugator {g:?} despite a negative verdict"
                        ));
                    }
                }
            }
        }
    }
    Ok(format!(
        "{hyperbolic} hyperbolic matrices, {positive} conjugate with verified witness, {negative} negative verdicts uncontradicted by {} conjugators",
        pool.len()
    ))
}

fn c2_euclid() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut n = 0;
    while n < 10_000 {
        let p: i64 = rng.gen_range(-700_000..=700_000);
        let q: i64 = rng.gen_range(-700_000..=700_000);
        if p.gcd(&q) != 1 || p * p + q * q > 1_000_000_000_000 {
            continue;
        }
        n += 1;
        let v = IntVector2::new(p, q);
        let word = decompose_primitive(&v).map_err(|e| e.to_string())?;
        ensure(word.apply_to_base() == v, || {
            format!("({p},{q}) not reconstructed")
        })?;
        let slack = word.len() as f64 - ((p * p + q * q) as f64).sqrt().log2();
        ensure(slack <= 10.0, || {
            format!("({p},{q}) needs {} factors", word.len())
        })?;
        worst = worst.max(slack);
    }
    Ok(format!(
        "10000 vectors reconstructed, max length − log2‖v‖ = {worst:.2}"
    ))
}

fn c3_qmorph() -> Check {
    let e = engine();
    let h = e.h().clone();
    for n in 1..=32i64 {
        let r = e.r_raw(&h.pow(n));
        ensure(r == n, || format!("r_raw(h^{n}) = {r}"))?;
    }
    let par = e
        .r_hom(&UnimodularMatrix::upper(1), 128)
        .map_err(|x| x.to_string())?;
    ensure(par.estimate.abs() <= par.error_bar, || {
        format!("r_hom(T) = {par:?}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let len = rng.gen_range(1..=12);
        let w = random_word(&mut rng, len, None);
        let r = e.r_hom(&w.conjugate(&h), 128).map_err(|x| x.to_string())?;
        ensure((r.estimate - 1.0).abs() <= 2.0 * r.error_bar, || {
            format!("r_hom(w h w⁻¹) = {r:?} for w = {w}")
        })?;
        worst = worst.max((r.estimate - 1.0).abs());
    }
    let d8 = e.defect_estimate(1000, 8, 0).value;
    let d16 = e.defect_estimate(1000, 16, 0).value;
    ensure(d16 - d8 <= 2.0, || {
        format!("defect {d8} at length 8 but {d16} at length 16")
    })?;
    Ok(format!(
        "r_raw(h^n)=n for n≤32, r_hom(T)={}, conjugates within {worst}, defect {d8} (len 8) vs {d16} (len 16)",
        par.estimate
    ))
}

fn disc_observable(radius: i64) -> Observable {
    let mut terms = Vec::new();
    for p in -radius..=radius {
        for q in -radius..=radius {
            if (p, q) != (0, 0) && p * p + q * q <= radius * radius {
                terms.push(((p, q), Complex64::new(1.0, 0.0)));
            }
        }
    }
    Observable::new(terms, None).unwrap()
}

fn c4_dichotomy() -> Check {
    // (a) the full disc of radius 16 dominates every support with N_F ≤ 16
    let n_max = 20;
    let mut latest = 0;
    for seed in 0..20u64 {
        let sys = compose(&seeded_system(2, seed), n_max).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut probes = vec![disc_observable(16)];
        for _ in 0..5 {
            let r = rng.gen_range(1..=11);
            probes.push(Observable::random_real(&mut rng, r));
        }
        for f_obs in &probes {
            let n0 = match zero_time(f_obs, &sys) {
                ZeroTime::At(n) => n,
                ZeroTime::NotReached => {
                    return Err(format!("seed {seed}: not mixed by n = {n_max}"))
                }
            };
            ensure(n0 <= 6, || format!("seed {seed}: zero time {n0}"))?;
            latest = latest.max(n0);
            for (n, f) in sys.iter().skip(n0 - 1) {
                let c = correlation(f_obs, f_obs, f).map_err(|e| e.to_string())?;
                ensure(c == Complex64::new(0.0, 0.0), || {
                    format!("seed {seed}: C = {c} at n = {n} ≥ {n0}")
                })?;
            }
        }
    }
    // (b) kicks g⁻¹, g, … with g h g⁻¹ = h⁻¹ undo each other every two steps
    let h = m(2, 1, 1, 1);
    let g = m(0, 1, -1, 0);
    ensure(g.conjugate(&h) == h.inverse(), || {
        "g does not invert h".into()
    })?;
    let spec = KickedSystemSpec {
        h,
        t: 1,
        kicks: KickSource::Periodic {
            kicks: vec![g.inverse(), g],
        },
        trace_bound: 2,
    };
    let sys = compose(&spec, 100).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f_obs = Observable::random_real(&mut rng, 6);
    let norm2: f64 = f_obs.terms().map(|(_, a)| a.norm_sqr()).sum();
    for k in 1..=50 {
        let c = correlation(&f_obs, &f_obs, sys.get(2 * k)).map_err(|e| e.to_string())?;
        ensure(
            sys.get(2 * k).is_identity() && c == Complex64::new(norm2, 0.0),
            || format!("k = {k}: C = {c}"),
        )?;
    }
    ensure(zero_time(&f_obs, &sys) == ZeroTime::NotReached, || {
        "counterexample reported as mixing".into()
    })?;
    Ok(format!(
        "120 probes over 20 seeds vanish from n ≤ {latest}; counterexample C = ‖F‖² for k ≤ 50"
    ))
}

fn quadrature(f1: &Observable, f2: &Observable, f: &UnimodularMatrix) -> Complex64 {
    // ∫ F1(f⁻¹x) F2(x) dx with f⁻¹ acting on columns
    let [a, b, c, d] = f.inverse().to_f64();
    let n = 512;
    let step = 1.0 / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * step, j as f64 * step);
            sum += f1.eval(a * x + b * y, c * x + d * y) * f2.eval(x, y);
        }
    }
    sum * step * step
}

fn c5_quadrature() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    while pairs < 5 {
        let len = rng.gen_range(1..=6);
        let f = random_word(&mut rng, len, None);
        if f.max_abs_entry() > BigInt::from(6) {
            continue;
        }
        pairs += 1;
        let f2 = Observable::random_real(&mut rng, 2);
        // F1 shares frequencies with the image of supp F2 so the pairing is not trivially zero
        let mut terms: Vec<_> = Observable::random_real(&mut rng, 2).terms().collect();
        for ((p, q), _) in f2.terms() {
            let (x, y) = f.act_row(&BigInt::from(p), &BigInt::from(q));
            let v = (-i64::try_from(x).unwrap(), -i64::try_from(y).unwrap());
            terms.push((
                v,
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ));
        }
        let f1 = Observable::new(terms, None).unwrap();
        let exact = correlation(&f1, &f2, &f).map_err(|e| e.to_string())?;
        let quad = quadrature(&f1, &f2, &f);
        let err = (exact - quad).norm();
        ensure(err <= 1e-6, || {
            format!("f = {f}: exact {exact}, quadrature {quad}")
        })?;
        ensure(exact.norm() > 1e-3, || format!("f = {f}: degenerate pair"))?;
        worst = worst.max(err);
    }
    Ok(format!("5 pairs, max |exact − quadrature| = {worst:.2e}"))
}

/// `(max − min)/|mean|` of the values.
fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / mean.abs()
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / n,
        pts.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn c6_norm_growth() -> Check {
    let sys = compose(&seeded_system(2, 0), 20).map_err(|e| e.to_string())?;
    let logs: Vec<(f64, f64)> = sys
        .iter()
        .map(|(n, f)| (n as f64, min_expansion(f, 10).log_value))
        .collect();
    let s = slope(&logs);
    ensure(s > 0.0, || format!("slope {s}"))?;
    let rates: Vec<f64> = logs[9..].iter().map(|(n, l)| l / n).collect();
    let sp = spread(&rates);
    ensure(sp <= 0.10, || {
        format!(
            "log min_expansion / n spreads by {:.1}% on [10, 20]",
            100.0 * sp
        )
    })?;
    Ok(format!(
        "slope {s:.3}, rate spread {:.2}% on [10, 20]",
        100.0 * sp
    ))
}

fn c7_reduction() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut n, mut deepest) = (0, 0);
    while n < 1000 {
        let len = rng.gen_range(2..=20);
        let f = random_word(&mut rng, len, None);
        let tr = f.trace().abs();
        if tr <= BigInt::from(2) || tr > BigInt::from(10_000) {
            continue;
        }
        n += 1;
        let t2 = &tr * &tr;
        let sc = reduce_small_c(&f).map_err(|e| e.to_string())?;
        let c = sc.g.c().clone();
        ensure(sc.conj.conjugate(&f) == sc.g, || {
            format!("{f}: conjugation mismatch")
        })?;
        ensure(BigInt::from(5) * &c * &c <= t2, || format!("{f}: c = {c}"))?;
        let sp = split_parabolic(&sc.g).map_err(|e| e.to_string())?;
        ensure(
            &sp.f_prime * &UnimodularMatrix::upper(-&sp.k) == sc.g,
            || format!("{f}: split mismatch"),
        )?;
        ensure(
            BigInt::from(2) * sp.f_prime.trace().abs() <= c.abs(),
            || format!("{f}: trace′ too large"),
        )?;
        let cert = trace_certificate(&f).map_err(|e| e.to_string())?;
        ensure(cert.verify() && cert.depth_within_log_bound(), || {
            format!("{f}: certificate depth {}", cert.depth)
        })?;
        deepest = deepest.max(cert.depth);
    }
    Ok(format!(
        "1000 matrices, all inequalities exact, deepest certificate {deepest}"
    ))
}

fn c8_sandwich() -> Check {
    let e = engine();
    let dr = e.defect().value;
    let h = e.h().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let len = rng.gen_range(0..=10);
        let g = random_word(&mut rng, len, Some(&h));
        let up = rho_upper(&g);
        ensure(up.verify(&g), || format!("{g}: witness fails"))?;
        let r = e.r_hom(&g, 128).map_err(|x| x.to_string())?;
        let lo = rho_lower(r.estimate, dr, DEFAULT_LIP_CONST).map_err(|x| x.to_string())?;
        ensure(lo <= up.upper as f64, || {
            format!("{g}: lower {lo} > upper {}", up.upper)
        })?;
    }
    let sym = m(2, 1, 1, 1);
    for k in 1..=10i64 {
        let g = sym.pow(2 * k);
        let up = rho_upper(&g);
        ensure(up.upper <= 1 && up.verify(&g), || {
            format!("rho_upper(h^{}) = {}", 2 * k, up.upper)
        })?;
    }
    let mut pts = Vec::new();
    for k in 1..=32i64 {
        let r = e.r_hom(&h.pow(k), 128).map_err(|x| x.to_string())?;
        pts.push((
            k as f64,
            rho_lower(r.estimate, dr, DEFAULT_LIP_CONST).map_err(|x| x.to_string())?,
        ));
    }
    let s = slope(&pts);
    ensure(s > 0.0, || format!("rho_lower slope {s}"))?;
    let spec = seeded_system(2, 0);
    let bar = rho_bar_kick_distance(&spec, 10).map_err(|x| x.to_string())?;
    Ok(format!("200 samples sandwiched, symmetric powers at distance ≤ 1, lower slope {s:.4}, kick distance {}", bar.bound))
}

fn c9_lyapunov() -> Check {
    let rates = trace_lyapunov(&seeded_system(2, 0), 40).map_err(|e| e.to_string())?;
    let window = &rates[19..];
    let sp = spread(window);
    let limit = rates[39];
    ensure(limit > 0.0, || format!("limit {limit}"))?;
    ensure(sp <= 0.05, || {
        format!("log|trace|/n spreads by {:.1}% on [20, 40]", 100.0 * sp)
    })?;
    Ok(format!(
        "log|trace|/n ≈ {limit:.4}, spread {:.2}% on [20, 40]",
        100.0 * sp
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 conjugacy decision", c1_conjugacy, 300),
        ("2 euclid decomposition", c2_euclid, 60),
        ("3 quasi-morphism", c3_qmorph, 600),
        ("4 mixing dichotomy", c4_dichotomy, 120),
        ("5 correlation oracle", c5_quadrature, 60),
        ("6 norm growth", c6_norm_growth, 120),
        ("7 trace reduction", c7_reduction, 60),
        ("8 metric sandwich", c8_sandwich, 300),
        ("9 trace lyapunov", c9_lyapunov, 60),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(budget) => {
                Err(format!("{msg}; over the {budget}s budget"))
            }
            other => other,
        };
        match outcome {
            Ok(msg) => println!("PASS  criterion {name} ({:.1}s): {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name} ({:.1}s): {msg}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
