//! Full analysis of a user polynomial, x^4 + y^4 + x^2 y^2 - x^2, given as monomial triples.

use truncvx::builtins::FieldSpec;
use truncvx::field::{GridSpec, Polynomial};
use truncvx::report::{cmd_analyze, RunConfig};

fn main() -> truncvx::error::Result<()> {
    let poly = Polynomial::parse("4,0,1; 0,4,1; 2,2,1; 2,0,-1")?;
    let config = RunConfig {
        field: FieldSpec::Polynomial { terms: poly.terms },
        window: Some(GridSpec::square(2.0, 300)?),
        ..RunConfig::default()
    };
    let report = cmd_analyze(&config)?;
    println!("h_max: {:?}", report.hess_region.h_max.map(|h| h.value));
    println!("nu_max: {:?}", report.critical.nu_max);
    if let (Some(sql), Some(scl)) = (&report.thresholds.sql, &report.thresholds.scl) {
        println!("sql in [{:.6}, {:.6}], scl in [{:.6}, {:.6}]", sql.lo, sql.hi, scl.lo, scl.hi);
    }
    for v in &report.inequalities {
        println!("{:<28} {:?}", v.name, v.holds);
    }
    std::process::exit(report.exit_code());
}
