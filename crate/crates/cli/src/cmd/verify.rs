use crate::args::{SuiteArg, VerifyArgs};
use crate::error::{validation, CliError, CliResult};
use crate::output::Format;
use oscillotex_core::verify::{run_criterion, CriterionReport, Suite};

/// Runtime budget per criterion in seconds.
pub const BUDGETS: [f64; 12] = [1.0, 10.0, 5.0, 5.0, 5.0, 10.0, 2.0, 30.0, 30.0, 20.0, 2.0, 5.0];

pub fn timing_table(reports: &[CriterionReport]) -> String {
    let mut s = format!("{:>3}  {:<28} {:>9} {:>9}  {}\n", "id", "criterion", "seconds", "budget", "");
    let mut total = 0.0;
    for r in reports {
        let b = BUDGETS[r.id as usize - 1];
        total += r.seconds;
        s.push_str(&format!(
            "{:>3}  {:<28} {:>9.3} {:>9.1}  {}\n",
            r.id,
            r.name,
            r.seconds,
            b,
            if r.seconds <= b { "ok" } else { "over" }
        ));
    }
    s.push_str(&format!("{:>3}  {:<28} {:>9.3}\n", "", "total", total));
    s
}

pub fn run(a: &VerifyArgs, format: Format) -> CliResult<()> {
    let suite = match a.suite {
        SuiteArg::Quick => Suite::Quick,
        SuiteArg::Full => Suite::Full,
    };
    let ids: Vec<u8> = if a.criterion.is_empty() { (1..=12).collect() } else { a.criterion.clone() };
    if let Some(bad) = ids.iter().find(|&&i| !(1..=12).contains(&i)) {
        return validation(format!("no criterion {bad}; ids run from 1 to 12"));
    }
    oscillotex_core::viscosity::set_bessel_mutation(a.mutate_bessel);
    let mut reports = Vec::with_capacity(ids.len());
    for id in ids {
        let r = run_criterion(id, suite).expect("id checked");
        if format == Format::Csv {
            println!("{}", r.line());
        }
        reports.push(r);
    }
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&reports).expect("reports serialize")),
        Format::Csv => {
            if suite == Suite::Full {
                print!("\n{}", timing_table(&reports));
            }
        }
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.pass).map(|r| format!("{} ({})", r.id, r.name)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("failed criteria: {}", failed.join(", "))))
    }
}
