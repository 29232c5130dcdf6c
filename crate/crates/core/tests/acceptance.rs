//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//! Run with `cargo test --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jumpcon::cli::random_data;
use jumpcon::exact_linalg::{dot, normalize_projective, rat, RatMatrix, Rational};
use jumpcon::hulsbergen::{corank_at, delta_symbolic, splitting_type, HulsbergenData};
use jumpcon::jump_surface::{
    closed_form, cone_data, dual_point, is_singular_at, jumping_polynomial,
    triple_plane_singularities,
};
use jumpcon::poncelet::{
    closure_oracle_numeric, embed_extension, poncelet_report, veronese_rank, ClosureStatus,
    PlaneConic, DEFAULT_CLOSURE_STARTS, DEFAULT_CLOSURE_TOL,
};
use jumpcon::quadric_geom::{
    conic_section, ConicSection, EmbeddedPlane, Plane, QuadricPoint, Vec3, Vec4,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn instances(k: usize) -> Vec<HulsbergenData> {
    (0..20)
        .map(|i| random_data(k, 1000 * k as u64 + i, true))
        .collect()
}

fn all_instances() -> Vec<HulsbergenData> {
    (1..=6).flat_map(instances).collect()
}

fn random_vec4(rng: &mut ChaCha8Rng) -> Vec4 {
    loop {
        let v: Vec4 = std::array::from_fn(|_| rat(rng.random_range(-9..=9)));
        if !v.iter().all(Zero::is_zero) {
            return v;
        }
    }
}

/// Plane through the given Segre points and random extra points, or `None`
/// if they fail to span a plane.
fn plane_through_points(pts: &[&QuadricPoint], rng: &mut ChaCha8Rng) -> Option<Plane> {
    let mut rows: Vec<Vec4> = pts.iter().map(|p| p.segre()).collect();
    while rows.len() < 3 {
        rows.push(random_vec4(rng));
    }
    let ns = RatMatrix::from_rows(&rows).ok()?.nullspace();
    (ns.len() == 1)
        .then(|| Plane::new(ns[0].clone().try_into().unwrap()).ok())
        .flatten()
}

fn incident_count(d: &HulsbergenData, h: &Plane) -> usize {
    d.points().iter().filter(|p| h.eval(p).is_zero()).count()
}

fn ac1_degree() -> Check {
    let mut n = 0;
    for d in all_instances() {
        let s = jumping_polynomial(&d).map_err(|e| e.to_string())?;
        ensure(s.degree() == d.k() - 1, || {
            format!("k={} gave degree {}", d.k(), s.degree())
        })?;
        ensure(s.equation().degree() == Some(d.k() as u32 - 1), || {
            "equation degree".into()
        })?;
        n += 1;
    }
    Ok(format!("{n} instances, k = 1..6"))
}

fn ac2_closed_form() -> Check {
    let mut n = 0;
    for d in all_instances() {
        let s = jumping_polynomial(&d).map_err(|e| e.to_string())?;
        let cf = closed_form(&d).map_err(|e| e.to_string())?;
        ensure(cf.proportional(s.equation()), || {
            format!("mismatch on k={} instance", d.k())
        })?;
        n += 1;
    }
    let mut m = 0;
    for d in instances(3) {
        let r = poncelet_report(&d, 1, DEFAULT_CLOSURE_TOL).map_err(|e| e.to_string())?;
        ensure(r.embedding_matches, || {
            "projected cone differs from c1Z2Z3+c2Z1Z3+c3Z1Z2".into()
        })?;
        m += 1;
    }
    Ok(format!(
        "{n} determinant/closed-form pairs, {m} projected k=3 cones"
    ))
}

fn ac3_symmetry() -> Check {
    let mut n = 0;
    for d in all_instances() {
        let delta = delta_symbolic(&d);
        ensure(delta.transpose() == delta, || {
            format!("asymmetric delta for k={}", d.k())
        })?;
        n += 1;
    }
    Ok(format!("{n} symbolic matrices"))
}

fn ac4_corank() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut planes, mut generic) = (0, 0);
    for d in all_instances() {
        let s = jumping_polynomial(&d).map_err(|e| e.to_string())?;
        let pts = d.points();
        for i in 0..200 {
            let h = match i % 4 {
                0 | 1 => Plane::new(random_vec4(&mut rng)).ok(),
                2 => plane_through_points(&[&pts[rng.random_range(0..pts.len())]], &mut rng),
                _ => {
                    let a = rng.random_range(0..pts.len());
                    let b = rng.random_range(0..pts.len());
                    plane_through_points(&[&pts[a], &pts[b]], &mut rng)
                }
            };
            let Some(h) = h else { continue };
            let vanishes = s.contains(&h);
            let corank = corank_at(&d, &h);
            ensure(vanishes == (corank > 0), || {
                format!("plane {h}: vanishes={vanishes}, corank={corank}")
            })?;
            if !vanishes && conic_section(&h) == ConicSection::Smooth {
                ensure(corank == 0, || "generic corank".into())?;
                let st = splitting_type(&d, &h).map_err(|e| e.to_string())?;
                ensure(st == (-1, -1), || format!("plane {h}: splitting {st:?}"))?;
                generic += 1;
            }
            planes += 1;
        }
    }
    Ok(format!(
        "{planes} planes, {generic} generic with splitting (-1,-1)"
    ))
}

fn ac5_points_on_plane() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 3];
    for d in all_instances() {
        let k = d.k();
        let s = jumping_polynomial(&d).map_err(|e| e.to_string())?;
        for m in 1..=k.min(3) {
            for _ in 0..5 {
                let mut idx: Vec<usize> = Vec::new();
                while idx.len() < m {
                    let i = rng.random_range(0..k);
                    if !idx.contains(&i) {
                        idx.push(i);
                    }
                }
                let chosen: Vec<&QuadricPoint> = idx.iter().map(|&i| &d.points()[i]).collect();
                let Some(h) = plane_through_points(&chosen, &mut rng) else {
                    continue;
                };
                if incident_count(&d, &h) != m {
                    continue;
                }
                let corank = corank_at(&d, &h);
                ensure(corank == m - 1, || {
                    format!("k={k}, {m} points on {h}: corank {corank}")
                })?;
                ensure(s.contains(&h) == (m >= 2), || {
                    format!("k={k}, {m} points: membership")
                })?;
                counts[m - 1] += 1;
            }
        }
    }
    ensure(counts.iter().all(|&c| c > 0), || {
        "no constructed planes".into()
    })?;
    Ok(format!(
        "planes through 1/2/3 points: {}/{}/{}",
        counts[0], counts[1], counts[2]
    ))
}

fn ac6_singular_count() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut smooth = 0;
    for (k, expected) in [(3, 1), (4, 4), (5, 10)] {
        for d in instances(k) {
            let t = triple_plane_singularities(&d).map_err(|e| e.to_string())?;
            ensure(t.len() == expected, || {
                format!("k={k}: {} triples", t.len())
            })?;
            ensure(t.iter().all(|x| x.singular), || {
                format!("k={k}: non-singular triple plane")
            })?;
            let mut planes: Vec<&Plane> = t.iter().map(|x| &x.plane).collect();
            planes.sort_by_key(|p| p.to_strings());
            planes.dedup();
            ensure(planes.len() == expected, || {
                format!("k={k}: repeated triple planes")
            })?;
            let s = jumping_polynomial(&d).map_err(|e| e.to_string())?;
            for _ in 0..5 {
                let a = rng.random_range(0..k);
                let b = (a + rng.random_range(1..k)) % k;
                let Some(h) = plane_through_points(&[&d.points()[a], &d.points()[b]], &mut rng)
                else {
                    continue;
                };
                if incident_count(&d, &h) != 2 {
                    continue;
                }
                ensure(s.contains(&h), || "2-point plane off the surface".into())?;
                ensure(!is_singular_at(&s, &h).map_err(|e| e.to_string())?, || {
                    format!("2-point plane {h} singular")
                })?;
                smooth += 1;
            }
        }
    }
    Ok(format!(
        "k=3,4,5 give 1/4/10 distinct singular triple planes; {smooth} smooth 2-point planes"
    ))
}

fn ac7_k2() -> Check {
    let mut n = 0;
    for d in instances(2) {
        let dp = dual_point(&d).map_err(|e| e.to_string())?;
        let s = jumping_polynomial(&d).map_err(|e| e.to_string())?;
        ensure(s.equation().num_terms() > 0, || "empty equation".into())?;
        let mut rng = ChaCha8Rng::seed_from_u64(7 + n);
        for _ in 0..20 {
            let y = random_vec4(&mut rng);
            let lin = dot(&dp.point, &y);
            let val = s.equation().eval(&y).map_err(|e| e.to_string())?;
            // proportional linear forms vanish together and share a fixed ratio
            ensure(lin.is_zero() == val.is_zero(), || {
                "dual point disagrees with S(E)".into()
            })?;
        }
        ensure(
            s.equation()
                .proportional(&jumpcon::forms::Form::linear(&dp.point)),
            || "S(E) is not the plane dual to the point".into(),
        )?;
        ensure(!dp.on_quadric, || "general k=2 point lies on Q".into())?;
        for zeroed in 0..2 {
            let mut c = d.coeffs().to_vec();
            c[zeroed] = rat(0);
            let dz = dual_point(&d.with_coeffs(c).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            ensure(dz.on_quadric, || {
                "zero coefficient left the point off Q".into()
            })?;
        }
        n += 1;
    }
    let reg = HulsbergenData::new(
        vec![
            QuadricPoint::from_ints([1, 0], [1, 0]).unwrap(),
            QuadricPoint::from_ints([0, 1], [0, 1]).unwrap(),
        ],
        vec![rat(2), rat(3)],
    )
    .map_err(|e| e.to_string())?;
    let dp = dual_point(&reg).map_err(|e| e.to_string())?;
    let got = normalize_projective(&dp.point);
    ensure(got == [3, 0, 0, 2].map(rat).to_vec(), || {
        format!("regression point {got:?}")
    })?;
    Ok(format!("{n} instances; regression (3,0,0,2)"))
}

fn ac8_cone() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sampled = 0;
    let mut datasets = instances(3);
    datasets.push(
        HulsbergenData::new(
            vec![
                QuadricPoint::from_ints([1, 0], [1, 0]).unwrap(),
                QuadricPoint::from_ints([0, 1], [0, 1]).unwrap(),
                QuadricPoint::from_ints([1, 1], [1, 1]).unwrap(),
            ],
            vec![rat(1); 3],
        )
        .unwrap(),
    );
    for (n, d) in datasets.iter().enumerate() {
        let cone = cone_data(d).map_err(|e| e.to_string())?;
        ensure(cone.rank == 3, || "rank".into())?;
        let gv = cone
            .gram
            .mul_vec(cone.vertex.coords())
            .map_err(|e| e.to_string())?;
        ensure(gv.iter().all(Zero::is_zero), || "gram * vertex != 0".into())?;
        let p = d.points();
        let span =
            jumpcon::quadric_geom::plane_through(&p[0], &p[1], &p[2]).map_err(|e| e.to_string())?;
        ensure(span == cone.vertex, || "vertex differs from span".into())?;
        ensure(corank_at(d, &cone.vertex) == 2, || {
            "corank at vertex".into()
        })?;
        if n == datasets.len() - 1 {
            ensure(
                cone.vertex == Plane::from_ints([0, 1, -1, 0]).unwrap(),
                || "T1 vertex".into(),
            )?;
        }
        let s = jumping_polynomial(d).map_err(|e| e.to_string())?;
        let q = |a: &Vec4, b: &Vec4| cone.gram.bilinear(a, b).unwrap();
        let Some(base) = plane_through_points(&[&p[0], &p[1]], &mut rng) else {
            continue;
        };
        for _ in 0..20 {
            // second intersection of a random line through a known cone point
            let r = random_vec4(&mut rng);
            let (qr, b) = (q(&r, &r), q(base.coords(), &r));
            let y: Vec4 = std::array::from_fn(|i| &qr * &base.coords()[i] - rat(2) * &b * &r[i]);
            let Ok(h) = Plane::new(y) else { continue };
            ensure(s.contains(&h), || "secant point off the cone".into())?;
            if h == cone.vertex {
                continue;
            }
            let c = corank_at(d, &h);
            ensure(c == 1, || {
                format!("corank {c} at non-vertex cone point {h}")
            })?;
            sampled += 1;
        }
    }
    Ok(format!(
        "{} cones, {sampled} non-vertex cone points with corank 1",
        datasets.len()
    ))
}

fn circle(r2: i64, frame: &EmbeddedPlane) -> PlaneConic {
    PlaneConic::new(
        RatMatrix::from_i64(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -r2]]),
        frame.clone(),
    )
    .unwrap()
}

fn ac9_poncelet() -> Check {
    let (mut n, mut conclusive) = (0, 0);
    for d in instances(3) {
        let r = poncelet_report(&d, DEFAULT_CLOSURE_STARTS, DEFAULT_CLOSURE_TOL)
            .map_err(|e| e.to_string())?;
        ensure(r.tangency == [true; 3], || {
            "dual line not tangent to C_H*".into()
        })?;
        ensure(r.incidence == [true; 3], || {
            "triangle vertex off C(E)".into()
        })?;
        ensure(r.cayley.is_zero(), || {
            format!("cayley invariant {}", r.cayley)
        })?;
        ensure(r.embedding_matches, || "embedding mismatch".into())?;
        ensure(r.closure != ClosureStatus::Open, || {
            "numeric oracle reports an open orbit".into()
        })?;
        if r.closure == ClosureStatus::Closed {
            conclusive += 1;
        }
        n += 1;
    }
    let frame = EmbeddedPlane::polar_image(&Plane::from_ints([0, 1, -1, 0]).unwrap());
    let unit = circle(1, &frame);
    let closing = closure_oracle_numeric(
        &circle(4, &frame),
        &unit,
        DEFAULT_CLOSURE_STARTS,
        DEFAULT_CLOSURE_TOL,
    )
    .map_err(|e| e.to_string())?;
    let open = closure_oracle_numeric(
        &circle(9, &frame),
        &unit,
        DEFAULT_CLOSURE_STARTS,
        DEFAULT_CLOSURE_TOL,
    )
    .map_err(|e| e.to_string())?;
    ensure(closing == ClosureStatus::Closed, || {
        format!("radius 2 pair: {closing:?}")
    })?;
    ensure(open == ClosureStatus::Open, || {
        format!("radius 3 pair: {open:?}")
    })?;
    Ok(format!("{n} instances certified, numeric oracle conclusive on {conclusive}; circle pairs calibrated"))
}

fn ac10_veronese() -> Check {
    let mut n = 0;
    for d in instances(3) {
        let r = poncelet_report(&d, 1, DEFAULT_CLOSURE_TOL).map_err(|e| e.to_string())?;
        let c: [Rational; 3] = d.coeffs().to_vec().try_into().unwrap();
        let lines: [Vec3; 3] = r.lines.clone();
        let full = embed_extension(&c, &lines, &r.frame).map_err(|e| e.to_string())?;
        ensure(veronese_rank(&full) == 3, || {
            "restored conic is singular".into()
        })?;
        for i in 0..3 {
            let mut z = c.clone();
            z[i] = rat(0);
            let e = embed_extension(&z, &lines, &r.frame).map_err(|e| e.to_string())?;
            ensure(veronese_rank(&e) <= 2, || {
                format!("c{} = 0 left rank 3", i + 1)
            })?;
        }
        n += 1;
    }
    Ok(format!(
        "{n} instances, each coefficient zeroed and restored"
    ))
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn cli_transcript() -> Result<Vec<u8>, String> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut runs: Vec<Vec<String>> = Vec::new();
    for f in &files {
        let f = f.to_string_lossy().to_string();
        runs.push(vec![
            "surface".into(),
            "--check-closed-form".into(),
            "--input".into(),
            f.clone(),
        ]);
        runs.push(vec!["singular".into(), "--input".into(), f.clone()]);
        runs.push(vec!["cone".into(), "--input".into(), f.clone()]);
        runs.push(vec!["poncelet".into(), "--input".into(), f.clone()]);
        runs.push(vec![
            "plane".into(),
            "--input".into(),
            f.clone(),
            "--plane".into(),
            "0,1,-1,0".into(),
        ]);
        runs.push(vec![
            "--format".into(),
            "text".into(),
            "plane".into(),
            "--input".into(),
            f,
            "--plane".into(),
            "1,2,3,4".into(),
        ]);
    }
    for k in 1..=6 {
        runs.push(vec![
            "random".into(),
            "--k".into(),
            k.to_string(),
            "--seed".into(),
            "7".into(),
            "--avoid-rulings".into(),
        ]);
    }
    let mut out = Vec::new();
    for args in runs {
        let o = Command::new(env!("CARGO_BIN_EXE_jumpcon"))
            .args(&args)
            .output()
            .map_err(|e| e.to_string())?;
        out.extend(args.join(" ").into_bytes());
        out.extend(format!("\nexit {:?}\n", o.status.code()).into_bytes());
        out.extend(o.stdout);
        out.extend(o.stderr);
    }
    Ok(out)
}

fn ac11_determinism() -> Check {
    let first = cli_transcript()?;
    let second = cli_transcript()?;
    ensure(first == second, || "CLI outputs differ between runs".into())?;
    let files = std::fs::read_dir(corpus_dir())
        .map_err(|e| e.to_string())?
        .count();
    Ok(format!(
        "{files} corpus files, {} transcript bytes identical",
        first.len()
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC1 degree law", ac1_degree),
        ("AC2 determinant equals closed form", ac2_closed_form),
        ("AC3 symmetric delta", ac3_symmetry),
        ("AC4 corank criterion", ac4_corank),
        ("AC5 points on a plane", ac5_points_on_plane),
        ("AC6 singular count", ac6_singular_count),
        ("AC7 k=2 dual point", ac7_k2),
        ("AC8 k=3 cone", ac8_cone),
        ("AC9 Poncelet certificates", ac9_poncelet),
        ("AC10 Veronese rank", ac10_veronese),
        ("AC11 CLI determinism", ac11_determinism),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (name, check) in criteria {
        let start = Instant::now();
        let result = check();
        let ms = start.elapsed().as_millis();
        match result {
            Ok(detail) => println!("[PASS] {name}: {detail} ({ms} ms)"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name}: {why} ({ms} ms)");
            }
        }
    }
    println!(
        "{} of 11 criteria passed in {} ms",
        11 - failed,
        total.elapsed().as_millis()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
