use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nclp::format::{self, Kind, MatrixFile};
use nclp_core::algebra::{BlockAlgebra, Element};
use nclp_core::lp::{self, LpExponent};
use nclp_core::matrix::CMatrix;
use nclp_core::random;
use nclp_core::tensorprod::{self, TensorAlgebra};
use nclp_core::{SpectralConfig, C64};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use serde_json::Value;
use tempfile::TempDir;

fn nclp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nclp"))
        .args(args)
        .env_remove("NCLP_EPS_REL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_diag(dir: &Path, name: &str, blocks: &[usize], d: &[f64], kind: Kind) -> PathBuf {
    let alg = BlockAlgebra::new(blocks).unwrap();
    let path = dir.join(name);
    format::write(
        &path,
        &MatrixFile {
            kind,
            element: Element::from_real_diag(&alg, d).unwrap(),
        },
    )
    .unwrap();
    path
}

fn field(line: &str, key: &str) -> f64 {
    let v = line
        .split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {line:?}"));
    if v == "inf" {
        f64::INFINITY
    } else {
        v.parse().unwrap()
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn divergence_of_identical_states_is_zero() {
    let dir = TempDir::new().unwrap();
    let a = write_diag(dir.path(), "a.json", &[2], &[0.3, 0.7], Kind::Functional);
    let o = nclp(&["divergence", "--kind", "sandwiched", "--alpha", "2", "--psi", s(&a), "--phi", s(&a)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let d_line = out.lines().find(|l| l.starts_with("D=")).unwrap();
    assert!(field(d_line, "D").abs() < 1e-14);
}

#[test]
fn classical_pair_alpha_z() {
    let dir = TempDir::new().unwrap();
    let rho = write_diag(dir.path(), "rho.json", &[2], &[0.5, 0.5], Kind::Functional);
    let sigma = write_diag(dir.path(), "sigma.json", &[2], &[1.0 / 3.0, 2.0 / 3.0], Kind::Functional);
    let o = nclp(&["divergence", "--kind", "alpha-z", "--alpha", "2", "--z", "2", "--psi", s(&rho), "--phi", s(&sigma)]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert!((field(lines.next().unwrap(), "Q") - 1.125).abs() < 1e-14);
    assert!((field(lines.next().unwrap(), "D") - (9.0f64 / 8.0).ln()).abs() < 1e-14);
}

#[test]
fn orthogonal_supports_give_infinity_with_exit_zero() {
    let dir = TempDir::new().unwrap();
    let a = write_diag(dir.path(), "a.json", &[2], &[1.0, 0.0], Kind::Functional);
    let b = write_diag(dir.path(), "b.json", &[2], &[0.0, 1.0], Kind::Functional);
    let o = nclp(&["divergence", "--kind", "sandwiched", "--alpha", "2", "--psi", s(&a), "--phi", s(&b)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("Q=inf reason=support_violation"));

    let o = nclp(&["divergence", "--kind", "sandwiched", "--alpha", "2", "--psi", s(&a), "--phi", s(&b), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["config"]["log_base"], "nat");
    assert_eq!(v["results"][0]["Q"]["value"], "inf");
    assert_eq!(v["results"][0]["D"]["reason"], "support_violation");

    let o = nclp(&["divergence", "--kind", "sandwiched", "--alpha", "0.7", "--psi", s(&a), "--phi", s(&b)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("D=inf reason=zero_Q_alpha_lt_1"));
}

#[test]
fn divergence_exit_codes() {
    let dir = TempDir::new().unwrap();
    let a = write_diag(dir.path(), "a.json", &[2], &[0.5, 0.5], Kind::Functional);
    let zero = write_diag(dir.path(), "z.json", &[2], &[0.0, 0.0], Kind::Functional);
    let elem = write_diag(dir.path(), "e.json", &[2], &[-1.0, 0.5], Kind::Element);
    let other = write_diag(dir.path(), "o.json", &[3], &[0.2, 0.3, 0.5], Kind::Functional);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"algebra\": ").unwrap();
    let run = |kind: &str, alpha: &str, z: Option<&str>, psi: &Path, phi: &Path| {
        let mut args = vec!["divergence", "--kind", kind, "--alpha", alpha, "--psi", s(psi), "--phi", s(phi)];
        if let Some(z) = z {
            args.extend(["--z", z]);
        }
        nclp(&args).status.code()
    };
    assert_eq!(run("sandwiched", "2", None, &bad, &a), Some(1));
    assert_eq!(run("sandwiched", "2", None, &dir.path().join("missing.json"), &a), Some(1));
    assert_eq!(run("sandwiched", "2", None, &elem, &a), Some(1));
    assert_eq!(run("sandwiched", "2", None, &other, &a), Some(1));
    assert_eq!(run("alpha-z", "2", None, &a, &a), Some(1));
    assert_eq!(run("sandwiched", "2", Some("2"), &a, &a), Some(1));
    assert_eq!(run("sandwiched", "1", None, &a, &a), Some(2));
    assert_eq!(run("sandwiched", "0.4", None, &a, &a), Some(2));
    assert_eq!(run("alpha-z", "2", Some("-1"), &a, &a), Some(2));
    assert_eq!(run("sandwiched", "2", None, &zero, &a), Some(2));
    assert_eq!(nclp(&["divergence"]).status.code(), Some(1));
}

#[test]
fn json_error_report() {
    let dir = TempDir::new().unwrap();
    let a = write_diag(dir.path(), "a.json", &[2], &[0.5, 0.5], Kind::Functional);
    let o = nclp(&["divergence", "--kind", "sandwiched", "--alpha", "1", "--psi", s(&a), "--phi", s(&a), "--json"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "error");
    assert!(v["error"].as_str().unwrap().contains("alpha"));
}

#[test]
fn lp_norm_examples() {
    let dir = TempDir::new().unwrap();
    let x = write_diag(dir.path(), "x.json", &[2], &[3.0, 4.0], Kind::Element);
    let norm = |args: &[&str]| {
        let o = nclp(args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        field(stdout(&o).trim(), "norm")
    };
    assert_eq!(norm(&["lp-norm", "--p", "2", "--x", s(&x)]), 5.0);
    assert_eq!(norm(&["lp-norm", "--p", "inf", "--x", s(&x)]), 4.0);
    assert_eq!(norm(&["lp-norm", "--p", "1", "--x", s(&x)]), 7.0);

    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let alg = BlockAlgebra::new(&[2, 1]).unwrap();
    let y = random::gaussian_element(&mut rng, &alg);
    let phi = random::positive_functional(&mut rng, &alg, random::RankProfile::Full);
    let yp = dir.path().join("y.json");
    let phip = dir.path().join("phi.json");
    format::write(&yp, &MatrixFile::element(y.clone())).unwrap();
    format::write(&phip, &MatrixFile::functional(&phi)).unwrap();
    let k = norm(&["lp-norm", "--p", "1", "--x", s(&yp), "--kosaki", "--phi", s(&phip), "--eta", "0.3"]);
    let plain = lp::lp_norm(&y, LpExponent::new(1.0).unwrap());
    assert!((k - plain).abs() <= 1e-12 * plain);
    for p in ["1.5", "3", "inf"] {
        let one = norm(&["lp-norm", "--p", p, "--x", s(&phip), "--kosaki", "--phi", s(&phip), "--eta", "0.5"]);
        assert!((one - 1.0).abs() < 1e-12, "p={p}: {one}");
    }
}

#[test]
fn lp_norm_exit_codes() {
    let dir = TempDir::new().unwrap();
    let x = write_diag(dir.path(), "x.json", &[2], &[3.0, 4.0], Kind::Element);
    let thin = write_diag(dir.path(), "thin.json", &[2], &[1.0, 0.0], Kind::Functional);
    let tiny = write_diag(dir.path(), "tiny.json", &[2], &[1.0, 1e-14], Kind::Functional);
    assert_eq!(nclp(&["lp-norm", "--p", "abc", "--x", s(&x)]).status.code(), Some(1));
    assert_eq!(nclp(&["lp-norm", "--p", "0", "--x", s(&x)]).status.code(), Some(2));
    assert_eq!(nclp(&["lp-norm", "--p", "2", "--x", s(&x), "--kosaki"]).status.code(), Some(1));
    let kosaki = |phi: &Path, p: &str, extra: &[&str]| {
        let mut a = vec!["lp-norm", "--p", p, "--x", s(&x), "--kosaki", "--phi", s(phi), "--eta", "0.5"];
        a.extend_from_slice(extra);
        nclp(&a).status.code()
    };
    assert_eq!(kosaki(&thin, "2", &[]), Some(2));
    assert_eq!(kosaki(&thin, "0.5", &[]), Some(2));
    assert_eq!(kosaki(&tiny, "2", &["--eps-rel", "1e-15"]), Some(3));
    assert_eq!(kosaki(&tiny, "2", &["--eps-rel", "2"]), Some(1));
}

#[test]
fn tensor_examples() {
    let dir = TempDir::new().unwrap();
    let cfg = SpectralConfig::default();
    let out = dir.path().join("out.json");
    let i2 = write_diag(dir.path(), "i2.json", &[2], &[1.0, 1.0], Kind::Element);
    let i21 = write_diag(dir.path(), "i21.json", &[2, 1], &[1.0, 1.0, 1.0], Kind::Element);
    assert_eq!(nclp(&["tensor", "--left", s(&i2), "--right", s(&i21), "-o", s(&out)]).status.code(), Some(0));
    let f = format::read(&out, &cfg).unwrap();
    assert_eq!(f.algebra().block_dims(), &[4, 2]);
    assert_eq!(f.element, Element::identity(f.algebra()));

    let a = write_diag(dir.path(), "a.json", &[2], &[1.0, 2.0], Kind::Functional);
    let b = write_diag(dir.path(), "b.json", &[1], &[3.0], Kind::Functional);
    assert_eq!(nclp(&["tensor", "--left", s(&a), "--right", s(&b), "-o", s(&out)]).status.code(), Some(0));
    let f = format::read(&out, &cfg).unwrap();
    assert_eq!(f.kind, Kind::Functional);
    assert_eq!(f.element, Element::from_real_diag(f.algebra(), &[3.0, 6.0]).unwrap());

    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let (la, ra) = (BlockAlgebra::new(&[2, 3]).unwrap(), BlockAlgebra::new(&[2]).unwrap());
    let x = random::gaussian_element(&mut rng, &la);
    let y = random::gaussian_element(&mut rng, &ra);
    let (xp, yp) = (dir.path().join("x.json"), dir.path().join("y.json"));
    format::write(&xp, &MatrixFile::element(x.clone())).unwrap();
    format::write(&yp, &MatrixFile::element(y.clone())).unwrap();
    assert_eq!(nclp(&["tensor", "--left", s(&xp), "--right", s(&yp), "-o", s(&out)]).status.code(), Some(0));
    let product = format::read(&out, &cfg).unwrap().element;
    let t = TensorAlgebra::new(&la, &ra);
    assert_eq!(product, tensorprod::kron_element(&t, &x, &y).unwrap());
    let two = LpExponent::new(2.0).unwrap();
    let rel = (lp::lp_norm(&product, two) - lp::lp_norm(&x, two) * lp::lp_norm(&y, two)).abs() / lp::lp_norm(&product, two);
    assert!(rel <= 1e-10);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[]").unwrap();
    assert_eq!(nclp(&["tensor", "--left", s(&bad), "--right", s(&yp), "-o", s(&out)]).status.code(), Some(1));
}

#[test]
fn suite_command() {
    let dir = TempDir::new().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    let args = |out: &Path| {
        nclp(&["suite", "--name", "theorem6", "--trials", "50", "--seed", "1", "--dims", "2x2,3x2", "--out", s(out)])
    };
    let o = args(&r1);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("passed=50 failed=0 status=ok"));
    assert_eq!(args(&r2).status.code(), Some(0));
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());

    let v: Value = serde_json::from_slice(&std::fs::read(&r1).unwrap()).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["config"]["seed"], 1);
    assert_eq!(v["config"]["log_base"], "nat");
    assert_eq!(v["config"]["dims"], serde_json::json!(["2x2", "3x2"]));
    assert_eq!(v["results"].as_array().unwrap().len(), 50);
    assert!(v["config"]["prng"].as_str().unwrap().starts_with("chacha20"));

    let o = nclp(&["suite", "--name", "lemma2", "--trials", "1", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));

    let o = nclp(&["suite", "--name", "theorem6", "--trials", "1", "--seed", "1", "--tol-override", "nope=1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nclp(&["suite", "--name", "theorem6", "--trials", "1", "--seed", "1", "--dims", "2y2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = nclp(&["suite", "--name", "theorem6", "--trials", "0", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));

    let failing = dir.path().join("fail.json");
    let o = nclp(&[
        "suite", "--name", "theorem6", "--trials", "3", "--seed", "1", "--tol-override", "relative_error=1e-300", "--out", s(&failing),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let v: Value = serde_json::from_slice(&std::fs::read(&failing).unwrap()).unwrap();
    assert_eq!(v["status"], "fail");
    assert_eq!(v["config"]["tolerances"]["relative_error"].as_f64(), Some(1e-300));
}

#[test]
fn eps_rel_from_environment_and_flag() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_nclp"));
        c.args(["suite", "--name", "lemma9", "--trials", "2", "--seed", "3"]);
        if let Some(f) = flag {
            c.args(["--eps-rel", f]);
        }
        match env {
            Some(e) => c.env("NCLP_EPS_REL", e),
            None => c.env_remove("NCLP_EPS_REL"),
        };
        c.output().unwrap()
    };
    let eps = |o: &Output| {
        let v: Value = serde_json::from_str(&stdout(o)).unwrap();
        v["config"]["eps_rel"].as_f64().unwrap()
    };
    assert_eq!(eps(&run(None, None)), 1e-12);
    assert_eq!(eps(&run(Some("1e-10"), None)), 1e-10);
    assert_eq!(eps(&run(Some("1e-10"), Some("1e-11"))), 1e-11);
    assert_eq!(run(Some("many"), None).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(nclp(&["--help"]).status.code(), Some(0));
    assert_eq!(nclp(&["--version"]).status.code(), Some(0));
    assert_eq!(nclp(&[]).status.code(), Some(1));
}

#[test]
fn complex_file_survives_the_binary() {
    let dir = TempDir::new().unwrap();
    let alg = BlockAlgebra::full(2).unwrap();
    let m = CMatrix::from_row_major(
        2,
        2,
        vec![C64::new(0.6, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.4, 0.0)],
    );
    let e = Element::from_blocks(&alg, vec![m]).unwrap();
    let p = dir.path().join("c.json");
    let mut f = MatrixFile::element(e);
    f.kind = Kind::Functional;
    format::write(&p, &f).unwrap();
    let o = nclp(&["divergence", "--kind", "alpha-z", "--alpha", "0.5", "--z", "0.5", "--psi", s(&p), "--phi", s(&p)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(field(stdout(&o).lines().next().unwrap(), "Q") - 1.0 < 1e-13);
}
