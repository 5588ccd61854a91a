//! Merging of command-line flags over an optional JSON config file.

use std::path::PathBuf;

use kaehler_core::scenarios::{ExampleConfig, Testbed};
use kaehler_core::{GeometryError, TolerancePolicy};
use serde::Deserialize;

use crate::{CommonArgs, Format};

/// Contents of `--config`; every field is optional and flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub c: Option<f64>,
    pub c_list: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub tol_rank: Option<f64>,
    pub tol_defect: Option<f64>,
    pub fd_step: Option<f64>,
    pub out: Option<PathBuf>,
    pub testbed: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Example,
    Theorem1,
    Flatform,
}

/// Scenario parameters after merging.
#[derive(Debug, Clone)]
pub enum Resolved {
    Example(ExampleConfig),
    Theorem1 { n: usize, p: usize },
    Flatform {
        testbed: Testbed,
        n: usize,
        p: usize,
        example: ExampleConfig,
    },
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub scenario: Resolved,
    pub policy: TolerancePolicy,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("missing required argument --{flag}"))
}

impl CliConfig {
    pub fn resolve(
        scenario: Scenario,
        args: &CommonArgs,
        testbed: Option<String>,
        file: FileConfig,
    ) -> Result<Self, String> {
        let n = args.n.or(file.n);
        let p = args.p.or(file.p);
        let c = args.c.or(file.c);
        let c_list = args.c_list.clone().or(file.c_list);
        let defaults = TolerancePolicy::default();
        let policy = TolerancePolicy {
            rank_tol: args.tol_rank.or(file.tol_rank).unwrap_or(defaults.rank_tol),
            defect_tol: args.tol_defect.or(file.tol_defect).unwrap_or(defaults.defect_tol),
            fd_step: args.fd_step.or(file.fd_step).unwrap_or(defaults.fd_step),
        };
        let example = |n: Option<usize>| -> Result<ExampleConfig, String> {
            Ok(ExampleConfig {
                n: required(n, "n")?,
                c: required(c, "c")?,
                c_list: required(c_list.clone(), "c-list")?,
            })
        };
        let resolved = match scenario {
            Scenario::Example => Resolved::Example(example(n)?),
            Scenario::Theorem1 => Resolved::Theorem1 {
                n: required(n, "n")?,
                p: required(p, "p")?,
            },
            Scenario::Flatform => {
                let name = required(testbed.or(file.testbed), "testbed")?;
                let testbed: Testbed = name.parse().map_err(|e: GeometryError| e.to_string())?;
                match testbed {
                    Testbed::Example => {
                        let config = example(n)?;
                        Resolved::Flatform {
                            testbed,
                            n: config.n,
                            p: config.p(),
                            example: config,
                        }
                    }
                    _ => Resolved::Flatform {
                        testbed,
                        n: required(n, "n")?,
                        p: required(p, "p")?,
                        example: ExampleConfig::reference(),
                    },
                }
            }
        };
        Ok(Self {
            scenario: resolved,
            policy,
            seed: args.seed.or(file.seed).unwrap_or(0),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or_default(),
        })
    }

    /// Preconditions of the selected scenario.
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.policy.validate()?;
        match &self.scenario {
            Resolved::Example(example) => example.validate(),
            Resolved::Theorem1 { n, p } => {
                if p + 3 > *n {
                    return Err(GeometryError::InvalidConfig(format!(
                        "p = {p} violates p ≤ n - 3 = {}",
                        *n as i64 - 3
                    )));
                }
                Ok(())
            }
            Resolved::Flatform { testbed, n, p, example } => match testbed {
                Testbed::Example => example.validate(),
                _ if *n < 1 || *p < 1 => Err(GeometryError::InvalidConfig(format!(
                    "n = {n} and p = {p} must be positive"
                ))),
                _ => Ok(()),
            },
        }
    }
}
