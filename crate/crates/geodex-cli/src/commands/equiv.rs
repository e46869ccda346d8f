//! `equiv` subcommand: the weight-space vs function-space tripwire.

use std::path::PathBuf;

use rand::SeedableRng;

use geodex::regression::equivalence::sweep;
use geodex::regression::equivalence_check;

use crate::config::{resolve, RunConfig};
use crate::csvio::fmt_f64;
use crate::error::{CliError, CliResult};

pub struct EquivArgs {
    pub trials: Option<usize>,
    pub max_n: Option<usize>,
    pub max_m: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

pub const THRESHOLD: f64 = 1e-8;

pub fn run(cfg: &RunConfig, args: &EquivArgs) -> CliResult<()> {
    let trials = resolve(&args.trials, cfg, "equiv.trials", 100usize)?;
    let max_n = resolve(&args.max_n, cfg, "equiv.max_n", 20usize)?;
    let max_m = resolve(&args.max_m, cfg, "equiv.max_m", 5usize)?;
    if trials == 0 {
        return Err(CliError::Validation("equiv needs at least 1 trial".into()));
    }

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(args.seed);
    let mut max_mean = 0.0f64;
    let mut max_cov = 0.0f64;
    for _ in 0..trials {
        let inst = sweep::instance(&mut rng, max_n, max_m);
        let r = equivalence_check(
            &inst.train_x,
            &inst.train_z,
            &inst.test_x,
            &inst.spec,
            &inst.priors,
        )?;
        max_mean = max_mean.max(r.max_mean_abs_diff);
        max_cov = max_cov.max(r.max_cov_abs_diff);
    }
    let worst = max_mean.max(max_cov);
    let pass = worst <= THRESHOLD;

    let report = format!(
        "trials={trials}\nmax_n={max_n}\nmax_m={max_m}\nseed={}\n\
         max_mean_abs_diff={}\nmax_cov_abs_diff={}\nthreshold={}\npass={}\n",
        args.seed,
        fmt_f64(max_mean),
        fmt_f64(max_cov),
        fmt_f64(THRESHOLD),
        pass
    );
    print!("{report}");
    if let Some(out) = &args.out {
        super::ensure_out_dir(out)?;
        std::fs::write(out.join("report.txt"), &report)?;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::EquivalenceBreach { max_abs_diff: worst, threshold: THRESHOLD })
    }
}
