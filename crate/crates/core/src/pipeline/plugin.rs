//! External upsampler processes.
//!
//! The plugin is spawned once per patch as `CMD... --ratio <r> --count <n>`,
//! receives the patch as ASCII XYZ on stdin and must print exactly r·n XYZ
//! lines on stdout and exit with status 0.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use wait_timeout::ChildExt;

use super::Upsampler;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::io::{parse_xyz, write_xyz};
use crate::scalar::Real;

pub const DEFAULT_PLUGIN_TIMEOUT_SECS: f64 = 60.0;

/// Longest stderr excerpt carried in an error message.
const STDERR_EXCERPT: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginSpec {
    /// Program followed by its fixed arguments.
    pub command: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_timeout() -> f64 {
    DEFAULT_PLUGIN_TIMEOUT_SECS
}

impl PluginSpec {
    /// Splits a command line on whitespace.
    pub fn from_command_line(line: &str) -> Result<Self> {
        let command: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        if command.is_empty() {
            return Err(Error::InvalidParameter("empty plugin command".into()));
        }
        Ok(PluginSpec {
            command,
            timeout_secs: DEFAULT_PLUGIN_TIMEOUT_SECS,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PluginUpsampler {
    spec: PluginSpec,
}

impl PluginUpsampler {
    pub fn new(spec: PluginSpec) -> Self {
        PluginUpsampler { spec }
    }
}

fn excerpt(stderr: &[u8]) -> String {
    let text = String::from_utf8_lossy(stderr);
    let text = text.trim();
    if text.is_empty() {
        return String::new();
    }
    let start = text
        .char_indices()
        .rev()
        .nth(STDERR_EXCERPT)
        .map_or(0, |(i, _)| i);
    format!("; stderr: {}", &text[start..])
}

impl<T: Real> Upsampler<T> for PluginUpsampler {
    fn upsample(
        &self,
        patch_index: usize,
        patch: &PointCloud<T>,
        ratio: usize,
    ) -> Result<PointCloud<T>> {
        let fail = |message: String| Error::Plugin {
            patch: patch_index,
            message,
        };
        let (program, fixed) = self
            .spec
            .command
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty plugin command".into()))?;
        if !(self.spec.timeout_secs > 0.0 && self.spec.timeout_secs.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "plugin timeout must be positive, got {}",
                self.spec.timeout_secs
            )));
        }
        let mut child = Command::new(program)
            .args(fixed)
            .arg("--ratio")
            .arg(ratio.to_string())
            .arg("--count")
            .arg(patch.len().to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| fail(format!("cannot start '{program}': {e}")))?;

        let mut input = Vec::new();
        write_xyz(&mut input, patch.points())?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = thread::spawn(move || {
            // A plugin may legitimately exit without reading everything.
            let _ = stdin.write_all(&input);
        });
        let mut stdout = child.stdout.take().expect("piped stdout");
        let out_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr.read_to_end(&mut buf);
            buf
        });

        let status = child
            .wait_timeout(Duration::from_secs_f64(self.spec.timeout_secs))
            .map_err(|e| fail(format!("wait failed: {e}")))?;
        let Some(status) = status else {
            let _ = child.kill();
            let _ = child.wait();
            let _ = writer.join();
            let err = err_reader.join().unwrap_or_default();
            return Err(fail(format!(
                "timed out after {} s{}",
                self.spec.timeout_secs,
                excerpt(&err)
            )));
        };
        let _ = writer.join();
        let out = out_reader
            .join()
            .map_err(|_| fail("stdout reader panicked".into()))?
            .map_err(|e| fail(format!("reading stdout: {e}")))?;
        let err = err_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(fail(format!("exited with {status}{}", excerpt(&err))));
        }
        if !err.is_empty() {
            log::debug!(
                "plugin stderr (patch {patch_index}): {}",
                String::from_utf8_lossy(&err)
            );
        }
        let text = String::from_utf8(out).map_err(|_| fail("output is not UTF-8".into()))?;
        let points = parse_xyz::<T>(&text).map_err(|e| fail(format!("malformed output: {e}")))?;
        let expected = ratio * patch.len();
        if points.len() != expected {
            return Err(fail(format!(
                "expected {expected} points, got {}",
                points.len()
            )));
        }
        PointCloud::new(points).map_err(|e| fail(format!("malformed output: {e}")))
    }
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;

    fn sh(script: &str) -> PluginUpsampler {
        PluginUpsampler::new(PluginSpec {
            command: vec!["sh".into(), "-c".into(), script.into(), "plugin".into()],
            timeout_secs: 5.0,
        })
    }

    fn patch() -> PointCloud<f64> {
        PointCloud::from_f64_triples(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn doubling_plugin() {
        let p = sh(
            r#"test "$1 $2 $3 $4" = "--ratio 2 --count 2" || exit 9; in=$(cat); printf '%s\n%s\n' "$in" "$in""#,
        );
        let out = Upsampler::<f64>::upsample(&p, 0, &patch(), 2).unwrap();
        assert_eq!(out.len(), 4);
        assert_eq!(out[2], patch()[0]);
    }

    #[test]
    fn echo_plugin_has_wrong_cardinality() {
        let err = Upsampler::<f64>::upsample(&sh("cat"), 3, &patch(), 4).unwrap_err();
        assert!(
            err.to_string().contains("expected 8 points, got 2"),
            "{err}"
        );
        assert!(err.to_string().contains("patch 3"));
    }

    #[test]
    fn failures_carry_stderr() {
        let err =
            Upsampler::<f64>::upsample(&sh("echo boom >&2; exit 3"), 0, &patch(), 2).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("boom") && msg.contains("exit"), "{msg}");
        let err = Upsampler::<f64>::upsample(&sh("echo 1 2 x"), 0, &patch(), 2).unwrap_err();
        assert!(err.to_string().contains("malformed"));
    }

    #[test]
    fn timeout_and_missing_program() {
        let mut p = sh("exec sleep 5");
        p.spec.timeout_secs = 0.2;
        let err = Upsampler::<f64>::upsample(&p, 0, &patch(), 2).unwrap_err();
        assert!(err.to_string().contains("timed out"));
        let missing =
            PluginUpsampler::new(PluginSpec::from_command_line("/nonexistent/upsampler").unwrap());
        assert!(matches!(
            Upsampler::<f64>::upsample(&missing, 0, &patch(), 2),
            Err(Error::Plugin { .. })
        ));
    }
}
