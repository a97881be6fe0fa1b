//! The scripted end-to-end demo: bring up a vulnerable lab and a fully
//! hardened lab on ephemeral ports, scan both, and narrate what each
//! attack class did. Exits 0 only when all four attacks reproduce and
//! all four hardened stages resist.

use nosqlab_scanner::{AttackClass, Report, Scanner, TargetConfig};
use nosqlab_service::{RestMode, Service, ServiceConfig};

const NARRATIVES: [(AttackClass, &str); 4] = [
    (
        AttackClass::ArrayInjection,
        "bracket-decoded form input turns scalar credentials into operator objects; `username[$ne]=1&password[$ne]=1` matches every user",
    ),
    (
        AttackClass::OrInjection,
        "string-concatenated query text lets a crafted username append an always-true $or branch, so a correct username logs in with no password",
    ),
    (
        AttackClass::JsInjection,
        "an unescaped mapReduce field name breaks out of the map function and runs arbitrary statements, inserting a marker document",
    ),
    (
        AttackClass::CsrfProbe,
        "a REST API that accepts url-encoded bodies can be driven by any HTML form, so a lured browser inserts documents from inside the network",
    ),
];

fn class_findings(report: &Report, class: AttackClass) -> usize {
    report.findings.iter().filter(|f| f.class == class).count()
}

pub async fn run_demo(disable_cast_mitigation: bool) -> u8 {
    println!("nosqlab demo: reproducing four attack classes, then testing the hardened twins\n");

    let vulnerable = Service::seeded(ServiceConfig {
        rest_mode: RestMode::Open,
        enable_state_endpoint: true,
        ..ServiceConfig::default()
    });
    let hardened = Service::seeded(ServiceConfig {
        rest_mode: RestMode::JsonOnly,
        enable_state_endpoint: true,
        disable_cast_mitigation,
    });
    let (vulnerable, hardened) =
        match (vulnerable.spawn_ephemeral().await, hardened.spawn_ephemeral().await) {
            (Ok(v), Ok(h)) => (v, h),
            (Err(e), _) | (_, Err(e)) => {
                eprintln!("cannot start in-process services: {e}");
                return 2;
            }
        };

    let vuln_report = match Scanner::new(TargetConfig::vulnerable_lab(&vulnerable.base_url()))
        .scan()
        .await
    {
        Ok(report) => report,
        Err(e) => {
            eprintln!("scan of the vulnerable lab failed: {e}");
            return 2;
        }
    };
    let hardened_report = match Scanner::new(TargetConfig::hardened_lab(&hardened.base_url()))
        .scan()
        .await
    {
        Ok(report) => report,
        Err(e) => {
            eprintln!("scan of the hardened lab failed: {e}");
            return 2;
        }
    };

    let mut failed_stages: Vec<String> = Vec::new();

    println!("vulnerable lab at {}:", vulnerable.base_url());
    for (class, narrative) in NARRATIVES {
        let hits = class_findings(&vuln_report, class);
        if hits > 0 {
            println!("  [{}] reproduced ({hits} finding(s)) — {narrative}", class.as_str());
        } else {
            println!("  [{}] NOT reproduced", class.as_str());
            failed_stages.push(format!("{}-vulnerable", class.as_str()));
        }
    }

    println!("\nhardened lab at {}:", hardened.base_url());
    for (class, _) in NARRATIVES {
        let hits = class_findings(&hardened_report, class);
        if hits == 0 {
            println!("  [{}] resisted", class.as_str());
        } else {
            println!("  [{}] STILL VULNERABLE ({hits} finding(s))", class.as_str());
            failed_stages.push(format!("{}-hardened", class.as_str()));
        }
    }

    println!();
    if failed_stages.is_empty() {
        println!("demo complete: 4/4 attacks reproduced, 4/4 hardened twins resisted");
        0
    } else {
        println!("demo FAILED at: {}", failed_stages.join(", "));
        1
    }
}
