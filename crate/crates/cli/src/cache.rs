//! On-disk cache of orbit balls keyed by (label, basepoint, radius, format
//! version). Entries are JSON; an entry whose contents disagree with its key
//! is ignored and rewritten.

use std::path::{Path, PathBuf};

use hyperbergman::fuchsian::{
    orbit_ball_with, GroupPresentation, OrbitBall, OrbitCaps, ORBIT_FORMAT_VERSION,
};
use hyperbergman::hypgeo::Point;
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn key(label: &str, p: &Point, r: f64) -> String {
    let c = p.coord();
    let text = format!(
        "{label}|{:?}|{:016x}|{:016x}|{:016x}|v{ORBIT_FORMAT_VERSION}",
        p.model(),
        c.re.to_bits(),
        c.im.to_bits(),
        r.to_bits()
    );
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn entry_path(dir: &Path, label: &str, p: &Point, r: f64) -> PathBuf {
    dir.join(format!("orbit-{}.json", key(label, p, r)))
}

fn matches(b: &OrbitBall, label: &str, p: &Point, r: f64) -> bool {
    b.version == ORBIT_FORMAT_VERSION
        && b.label == label
        && b.radius.to_bits() == r.to_bits()
        && b.basepoint.coord() == p.coord()
        && b.basepoint.model() == p.model()
}

/// The orbit ball of `g` at `p` with radius `r`, from the cache when present.
/// Incomplete balls are returned but never stored, so the element budget
/// need not enter the key.
pub fn orbit_ball_cached(
    g: &GroupPresentation,
    p: &Point,
    r: f64,
    max_elements: Option<usize>,
    dir: Option<&Path>,
) -> Result<OrbitBall, CliError> {
    let p = p.in_model(g.model());
    if let Some(dir) = dir {
        let path = entry_path(dir, &g.label, &p, r);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(b) = serde_json::from_str::<OrbitBall>(&text) {
                if matches(&b, &g.label, &p, r) {
                    return Ok(b);
                }
            }
        }
    }
    let mut caps = OrbitCaps::default();
    if let Some(n) = max_elements {
        caps.max_elements = n;
    }
    let ball = match orbit_ball_with(g, &p, r, &caps) {
        Ok(b) => b,
        Err(hyperbergman::Error::Budget(b)) => *b,
        Err(e) => return Err(e.into()),
    };
    if let (Some(dir), true) = (dir, ball.complete) {
        std::fs::create_dir_all(dir)?;
        let path = entry_path(dir, &g.label, &p, r);
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(&ball)?)?;
        std::fs::rename(tmp, path)?;
    }
    Ok(ball)
}
