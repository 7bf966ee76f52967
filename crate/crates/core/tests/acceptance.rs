//! Acceptance criteria. Runs as a plain binary (no libtest harness) so that a
//! PASS/FAIL line is printed for every criterion on every run.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use phong_cbir::eval::{render_csv, EvalResult, EvalRow, QueryMode, ShadingMode};
use phong_cbir::features::{glcm, sobel_gradients, texture_features, Glcm};
use phong_cbir::index::Index;
use phong_cbir::phong::{
    phong_intensity, shade_image, tile_ndoth, PhongParams, TileInterpolant, Vec3,
};
use phong_cbir::{
    build_index, euclidean_distance, extract_features, generate_synthetic_corpus, load_index,
    precision, rank, read_ppm, recall, run_experiment, save_index, ExtractionOpts, GrayImage,
    RgbImage,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_gray(rng: &mut ChaCha8Rng, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |_, _| rng.gen())
}

fn random_rgb(rng: &mut ChaCha8Rng, w: usize, h: usize) -> RgbImage {
    RgbImage::from_fn(w, h, |_, _| rng.gen())
}

/// 1. Printed table percentages from the raw counts.
fn table_arithmetic() -> Outcome {
    // (relevant retrieved, printed precision %, printed recall %)
    let table_i = [
        (6, 50.0, 43.0),
        (6, 50.0, 43.0),
        (10, 83.0, 71.0),
        (9, 75.0, 64.0),
        (7, 58.0, 50.0),
    ];
    let table_ii = [
        (4, 33.3, 28.57),
        (1, 8.3, 7.1),
        (9, 75.0, 64.5),
        (6, 50.0, 42.0),
        (5, 41.0, 35.0),
    ];
    let (retrieved, in_db) = (12, 14);
    let mut worst: f64 = 0.0;
    for (name, table) in [("I", table_i), ("II", table_ii)] {
        for (cat, (rr, p_pct, r_pct)) in table.iter().enumerate() {
            let p = precision(*rr, retrieved).map_err(|e| e.to_string())? * 100.0;
            let r = recall(*rr, in_db).map_err(|e| e.to_string())? * 100.0;
            for (got, printed) in [(p, *p_pct), (r, *r_pct)] {
                let dev = (got - printed).abs();
                worst = worst.max(dev);
                ensure!(
                    dev <= 1.0,
                    "table {name} category {}: computed {got:.3}% vs printed {printed}%",
                    cat + 1
                );
            }
        }
    }
    // The same counts rendered through the report emitter.
    let rows = |t: &[(usize, f64, f64)]| -> Vec<EvalRow> {
        t.iter()
            .enumerate()
            .map(|(i, (rr, _, _))| {
                EvalRow::from_counts((i + 1).to_string(), *rr, retrieved, in_db).unwrap()
            })
            .collect()
    };
    let shaded = EvalResult {
        k: 12,
        mode: ShadingMode::Shaded,
        rows: rows(&table_i),
    };
    let unshaded = EvalResult {
        k: 12,
        mode: ShadingMode::Unshaded,
        rows: rows(&table_ii),
    };
    let csv = render_csv(&shaded, &unshaded).map_err(|e| e.to_string())?;
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let mut n = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let cat: usize = rec[0].parse().unwrap();
        let row = if &rec[1] == "shaded" {
            table_i[cat - 1]
        } else {
            table_ii[cat - 1]
        };
        let p: f64 = rec[5].parse().unwrap();
        let r: f64 = rec[6].parse().unwrap();
        let p1: f64 = format!("{:.1}", p * 100.0).parse().unwrap();
        let r1: f64 = format!("{:.1}", r * 100.0).parse().unwrap();
        ensure!(
            (p1 - row.1).abs() <= 1.0 && (r1 - row.2).abs() <= 1.0,
            "csv row {cat} {} off",
            &rec[1]
        );
        n += 1;
    }
    ensure!(n == 10, "expected 10 csv rows, got {n}");
    Ok(format!("20 percentages within ±1 pp (worst {worst:.2} pp)"))
}

fn direct_texture(levels: usize, p: &[f64]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..levels {
        for j in 0..levels {
            let v = p[i * levels + j];
            let d = i as f64 - j as f64;
            if v > 0.0 {
                out[0] += -v * v.ln() / std::f64::consts::LN_2;
            }
            out[1] += d * d * v;
            out[2] += v.powi(2);
            out[3] += v / (1.0 + d.abs());
        }
    }
    out
}

fn naive_sobel(img: &GrayImage) -> (Vec<i32>, Vec<i32>) {
    let kx = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
    let ky = [[1, 2, 1], [0, 0, 0], [-1, -2, -1]];
    let (w, h) = (img.width(), img.height());
    // Explicitly padded copy.
    let mut padded = vec![vec![0i32; w + 2]; h + 2];
    for (py, row) in padded.iter_mut().enumerate() {
        for (px, cell) in row.iter_mut().enumerate() {
            let sx = (px as isize - 1).clamp(0, w as isize - 1) as usize;
            let sy = (py as isize - 1).clamp(0, h as isize - 1) as usize;
            *cell = img.pixels()[sy * w + sx] as i32;
        }
    }
    let mut gx = vec![0; w * h];
    let mut gy = vec![0; w * h];
    for y in 0..h {
        for x in 0..w {
            for i in 0..3 {
                for j in 0..3 {
                    gx[y * w + x] += kx[i][j] * padded[y + i][x + j];
                    gy[y * w + x] += ky[i][j] * padded[y + i][x + j];
                }
            }
        }
    }
    (gx, gy)
}

fn brute_glcm(img: &GrayImage, levels: usize, (dx, dy): (i32, i32)) -> Vec<f64> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let q = |x: i32, y: i32| {
        ((img.get(x as usize, y as usize) as f64) * levels as f64 / 256.0).floor() as usize
    };
    let mut counts = vec![0usize; levels * levels];
    let mut total = 0;
    for y1 in 0..h {
        for x1 in 0..w {
            for y2 in 0..h {
                for x2 in 0..w {
                    if x2 - x1 == dx && y2 - y1 == dy {
                        counts[q(x1, y1) * levels + q(x2, y2)] += 1;
                        total += 1;
                    }
                }
            }
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / total as f64)
        .collect()
}

/// 2. Texture, Sobel and co-occurrence against independent oracles.
fn formula_oracles() -> Outcome {
    let start = Instant::now();
    let mut cases: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut single = vec![0.0; 64];
    single[5 * 8 + 5] = 1.0;
    cases.push((8, single));
    let mut diag = vec![0.0; 64];
    for k in 0..4 {
        diag[k * 8 + k] = 0.25;
    }
    cases.push((8, diag));
    let mut off = vec![0.0; 64];
    off[1] = 1.0;
    cases.push((8, off));
    let expected = [
        [0.0, 0.0, 1.0, 1.0],
        [2.0, 0.0, 0.25, 1.0],
        [0.0, 1.0, 1.0, 0.5],
    ];
    for ((levels, p), want) in cases.iter().zip(expected) {
        let t = texture_features(
            &Glcm::from_probabilities(*levels, p.clone()).map_err(|e| e.to_string())?,
        );
        let got = [t.entropy, t.contrast, t.energy, t.homogeneity];
        let direct = direct_texture(*levels, p);
        for k in 0..4 {
            ensure!(
                (got[k] - direct[k]).abs() <= 1e-12,
                "texture slot {k}: {} vs direct {}",
                got[k],
                direct[k]
            );
            ensure!(
                (got[k] - want[k]).abs() <= 1e-12,
                "texture slot {k}: {} vs expected {}",
                got[k],
                want[k]
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 0..200 {
        let (w, h) = (rng.gen_range(5..=9), rng.gen_range(5..=9));
        let img = random_gray(&mut rng, w, h);
        let g = sobel_gradients(&img);
        let (gx, gy) = naive_sobel(&img);
        ensure!(
            g.gx == gx && g.gy == gy,
            "sobel mismatch on random image {n} ({w}x{h})"
        );
    }

    for n in 0..200 {
        let img = random_gray(&mut rng, 8, 8);
        let g = glcm(&img, 8, (1, 0)).map_err(|e| e.to_string())?;
        ensure!(
            g.probabilities() == brute_glcm(&img, 8, (1, 0)).as_slice(),
            "glcm mismatch on random image {n}"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "3 texture cases ≤1e-12, 200 sobel + 200 glcm exact ({elapsed:.2?})"
    ))
}

/// 3. Shading identities.
fn phong_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(1..20), rng.gen_range(1..20));
        let img = random_rgb(&mut rng, w, h);
        ensure!(
            shade_image(&img, &PhongParams::identity()) == img,
            "ambient-only changed a {w}x{h} image"
        );
        let flat = RgbImage::filled(w, h, rng.gen());
        let out = shade_image(&flat, &PhongParams::default());
        ensure!(
            out.pixels().iter().all(|&p| p == out.get(0, 0)),
            "constant image shaded non-uniformly"
        );
    }

    for i in 0..1000 {
        let p = PhongParams {
            ka: rng.gen_range(0.0..2.0),
            kd: rng.gen_range(0.0..2.0),
            ks: rng.gen_range(0.0..2.0),
            ia: rng.gen_range(0.0..2.0),
            il: rng.gen_range(0.0..2.0),
            ns: rng.gen_range(1.0..100.0),
            ..PhongParams::default()
        };
        let (nl, nh): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let spec = if nh > 0.0 {
            (p.ns * nh.ln()).exp()
        } else {
            0.0
        };
        let closed = p.ka * p.ia + p.kd * p.il * nl.max(0.0) + p.ks * p.il * spec;
        let got = phong_intensity(nl, nh, &p);
        ensure!((got - closed).abs() <= 1e-12, "draw {i}: {got} vs {closed}");
    }

    // Corner-anchored normals over a 4x4 tile, H varying too.
    let rv = |rng: &mut ChaCha8Rng| {
        Vec3::new(
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(0.5..1.5),
        )
    };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (n00, n10, n01) = (rv(&mut rng), rv(&mut rng), rv(&mut rng));
        let (h00, h10, h01) = (rv(&mut rng), rv(&mut rng), rv(&mut rng));
        let t = TileInterpolant {
            a: (n10 - n00) * 0.25,
            b: (n01 - n00) * 0.25,
            c: n00,
            d: (h10 - h00) * 0.25,
            e: (h01 - h00) * 0.25,
            f: h00,
        };
        for y in 0..=4 {
            for x in 0..=4 {
                let (u, v) = (x as f64 / 4.0, y as f64 / 4.0);
                let n = n00 + (n10 - n00) * u + (n01 - n00) * v;
                let h = h00 + (h10 - h00) * u + (h01 - h00) * v;
                let nu = n * (1.0 / n.norm());
                let hu = h * (1.0 / h.norm());
                let oracle = nu.x * hu.x + nu.y * hu.y + nu.z * hu.z;
                let got = tile_ndoth(&t, x as f64, y as f64).map_err(|e| e.to_string())?;
                worst = worst.max((got - oracle).abs());
            }
        }
    }
    ensure!(worst <= 1e-12, "tile_ndoth deviates by {worst:e}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "identity/constant/1000 draws/tile oracle (worst {worst:.1e}, {elapsed:.2?})"
    ))
}

/// 4. Metric axioms.
fn metric_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut v = || -> Vec<f64> { (0..15).map(|_| rng.gen_range(-10.0..10.0)).collect() };
    let mut min_slack = f64::INFINITY;
    for i in 0..1000 {
        let (a, b, c) = (v(), v(), v());
        let d = |x: &[f64], y: &[f64]| euclidean_distance(x, y).unwrap();
        ensure!(d(&a, &b) == d(&b, &a), "asymmetric on triple {i}");
        ensure!(d(&a, &a) == 0.0, "nonzero self-distance on triple {i}");
        ensure!(
            d(&a, &b) > 0.0,
            "distinct points at distance 0 on triple {i}"
        );
        let slack = d(&a, &b) + d(&b, &c) - d(&a, &c);
        min_slack = min_slack.min(slack);
        ensure!(
            slack >= -1e-9,
            "triangle inequality violated on triple {i}: {slack}"
        );
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "1000 triples, min triangle slack {min_slack:.3} ({elapsed:.2?})"
    ))
}

struct Corpus {
    _dir: tempfile::TempDir,
    root: std::path::PathBuf,
    shaded: Index,
    unshaded: Index,
}

fn synthetic_corpus() -> Result<(Corpus, Duration), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("corpus");
    generate_synthetic_corpus(&root, 42).map_err(|e| e.to_string())?;
    let opts = ExtractionOpts::default();
    let t = Instant::now();
    let shaded =
        build_index(&root, Some(&PhongParams::default()), &opts).map_err(|e| e.to_string())?;
    let index_time = t.elapsed();
    let unshaded = build_index(&root, None, &opts).map_err(|e| e.to_string())?;
    Ok((
        Corpus {
            _dir: dir,
            root,
            shaded,
            unshaded,
        },
        index_time,
    ))
}

/// 5. Retrieval on the seed-42 synthetic corpus.
fn end_to_end(corpus: &Corpus, index_time: Duration) -> Outcome {
    ensure!(
        index_time < Duration::from_secs(10),
        "indexing 70 images took {index_time:?}"
    );
    let start = Instant::now();
    let mut summary = Vec::new();
    for ix in [&corpus.shaded, &corpus.unshaded] {
        ensure!(
            ix.len() == 70 && ix.categories().len() == 5,
            "unexpected corpus shape"
        );
        for mode in [QueryMode::PerCategoryFirst, QueryMode::AllQueriesAveraged] {
            let r = run_experiment(ix, 12, mode).map_err(|e| e.to_string())?;
            let mp = r.mean_precision();
            ensure!(
                mp >= 0.8,
                "{} {mode:?}: mean precision {mp:.3} < 0.8",
                r.mode.as_str()
            );
            summary.push(format!("{} {:?} P={mp:.3}", r.mode.as_str(), mode));
        }
        // Self-exclusion disabled: every image retrieves itself first.
        for e in &ix.entries {
            let img = read_ppm(corpus.root.join(&e.path)).map_err(|e| e.to_string())?;
            let f = extract_features(&img, ix.phong.as_ref(), &ix.extraction_opts)
                .map_err(|e| e.to_string())?;
            let top = rank(&f, ix, 1).map_err(|e| e.to_string())?;
            ensure!(
                top[0].path == e.path && top[0].distance < 1e-9,
                "{} did not retrieve itself first",
                e.path
            );
        }
    }
    let eval_time = start.elapsed();
    ensure!(
        eval_time < Duration::from_secs(30),
        "evaluation took {eval_time:?}"
    );
    Ok(format!(
        "{} (index {index_time:.2?}, eval {eval_time:.2?})",
        summary.join(", ")
    ))
}

fn cbir(args: &[&std::ffi::OsStr]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cbir"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "cbir {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = walkdir::WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .map(|e| {
            let rel = e
                .path()
                .strip_prefix(root)
                .unwrap()
                .to_string_lossy()
                .into_owned();
            (rel, std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// 6. Byte determinism of index, synth and eval outputs through the CLI.
fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |s: &str| dir.path().join(s);
    cbir(&[
        "synth".as_ref(),
        p("a").as_os_str(),
        "--seed".as_ref(),
        "42".as_ref(),
    ])?;
    cbir(&[
        "synth".as_ref(),
        p("b").as_os_str(),
        "--seed".as_ref(),
        "42".as_ref(),
    ])?;
    let (ta, tb) = (tree_bytes(&p("a")), tree_bytes(&p("b")));
    ensure!(ta.len() == 70, "synth wrote {} files", ta.len());
    ensure!(ta == tb, "synth trees differ");

    for (name, shaded) in [
        ("s1.json", true),
        ("s2.json", true),
        ("u1.json", false),
        ("u2.json", false),
    ] {
        let mut args: Vec<std::ffi::OsString> = vec![
            "index".into(),
            p("a").into_os_string(),
            "--out".into(),
            p(name).into_os_string(),
        ];
        if shaded {
            args.push("--phong".into());
        }
        let refs: Vec<&std::ffi::OsStr> = args.iter().map(|a| a.as_ref()).collect();
        cbir(&refs)?;
    }
    let read = |n: &str| std::fs::read(p(n)).unwrap();
    ensure!(
        read("s1.json") == read("s2.json"),
        "shaded index runs differ"
    );
    ensure!(
        read("u1.json") == read("u2.json"),
        "unshaded index runs differ"
    );

    for r in ["r1", "r2"] {
        cbir(&[
            "eval".as_ref(),
            p("s1.json").as_os_str(),
            p("u1.json").as_os_str(),
            "--report-dir".as_ref(),
            p(r).as_os_str(),
        ])?;
    }
    let (r1, r2) = (tree_bytes(&p("r1")), tree_bytes(&p("r2")));
    ensure!(r1.len() == 2 && r1 == r2, "eval reports differ");
    Ok("synth, index (shaded + unshaded) and eval outputs byte-identical across runs".into())
}

/// 7. Persistence round trip and rejection of malformed files.
fn persistence(corpus: &Corpus) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for ix in [&corpus.shaded, &corpus.unshaded] {
        let path = dir.path().join("ix.json");
        save_index(ix, &path).map_err(|e| e.to_string())?;
        let back = load_index(&path).map_err(|e| e.to_string())?;
        ensure!(&back == ix, "round trip changed the index");
        let bits = |i: &Index| {
            i.entries
                .iter()
                .flat_map(|e| e.features.0.map(f64::to_bits))
                .collect::<Vec<_>>()
        };
        ensure!(bits(&back) == bits(ix), "feature bits changed");
    }
    let json: serde_json::Value = serde_json::from_str(&corpus.unshaded.to_json()).unwrap();
    let mut v999 = json.clone();
    v999["version"] = 999.into();
    match Index::from_json(&v999.to_string()) {
        Err(phong_cbir::Error::IndexVersion { found: 999, .. }) => {}
        other => return Err(format!("version 999 not rejected: {other:?}")),
    }
    let mut short = json.clone();
    short["entries"][3]["features"]
        .as_array_mut()
        .unwrap()
        .pop();
    match Index::from_json(&short.to_string()) {
        Err(phong_cbir::Error::IndexSchema(_)) => {}
        other => return Err(format!("14-value entry not rejected: {other:?}")),
    }
    let mut stale = json;
    stale["normalizer"]["mins"][0] = (-1.0).into();
    ensure!(
        matches!(
            Index::from_json(&stale.to_string()),
            Err(phong_cbir::Error::IndexSchema(_))
        ),
        "stale normalizer accepted"
    );
    Ok("exact round trip; version 999, 14-value entry and stale normalizer rejected".into())
}

/// 8. Shading changes descriptors of non-flat images.
fn shading_effect(corpus: &Corpus) -> Outcome {
    let mut differing = 0;
    for (s, u) in corpus.shaded.entries.iter().zip(&corpus.unshaded.entries) {
        ensure!(s.path == u.path, "index orders differ");
        ensure!(
            s.features != u.features,
            "{}: shaded and unshaded features identical",
            s.path
        );
        differing += 1;
    }
    Ok(format!(
        "{differing}/70 descriptors differ between pipelines"
    ))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 table arithmetic", table_arithmetic()),
        ("2 formula oracles", formula_oracles()),
        ("3 phong identities", phong_identities()),
        ("4 metric properties", metric_properties()),
    ];
    match synthetic_corpus() {
        Ok((corpus, t)) => {
            results.push(("5 end-to-end retrieval", end_to_end(&corpus, t)));
            results.push(("6 determinism", determinism()));
            results.push(("7 persistence", persistence(&corpus)));
            results.push(("8 shading effect", shading_effect(&corpus)));
        }
        Err(e) => {
            for name in [
                "5 end-to-end retrieval",
                "7 persistence",
                "8 shading effect",
            ] {
                results.push((name, Err(format!("corpus setup failed: {e}"))));
            }
            results.push(("6 determinism", determinism()));
        }
    }

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("[PASS] criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] criterion {name}: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
