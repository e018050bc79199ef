use clap::{Args, ValueEnum};
use groupauth::fixtures::*;
use groupauth::nscrypt::{decrypt, encrypt, Ciphertext, Plaintext};
use groupauth::policy::{authorized_family, parse, GroupFamily, Universe};
use groupauth::protocol::{
    audit_with_plaintexts, challenge_for_plaintexts, merge_monotone, token_respond, AuditConfig,
    IssuedShares, MergeRule, Mode, NullPolicy, TokenShare,
};
use groupauth::sharesplit::{bl_split, issue_monotone, issue_sequence, slots_packed, Partitioner, SlotPlan};
use groupauth::{Nat, PrivateKey};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use crate::commands::{audit_summary, plan_table, render_table};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fixture {
    Airplane,
    Small,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    fixture: Fixture,
    /// Print a machine-readable summary instead of tables.
    #[arg(long)]
    json: bool,
}

pub fn run(args: DemoArgs) -> CliResult {
    match args.fixture {
        Fixture::Airplane => airplane(args.json),
        Fixture::Small => small(args.json),
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(format!("fixture error: {e}"))
}

fn audit_2919(plan: &SlotPlan, private: &PrivateKey, expected: &GroupFamily) -> CliResult<groupauth::protocol::AuditReport<Nat>> {
    let seqs = issue_sequence(plan, private).map_err(internal)?;
    let shares = IssuedShares::sequence(plan.universe().clone(), seqs).map_err(internal)?;
    audit_with_plaintexts(
        private,
        &shares,
        expected,
        &AuditConfig::default_for(Mode::Sequence),
        &[vec![Nat::from(REFERENCE_PLAINTEXT)]],
        &mut ChaCha20Rng::seed_from_u64(0),
    )
    .map_err(internal)
}

fn airplane(as_json: bool) -> CliResult {
    let (public, private) = reference_keys::<Nat>().map_err(internal)?;
    let u = airplane_universe();
    let expected = airplane_family().map_err(internal)?;
    let key_ok = public.values().iter().zip(REFERENCE_PUBLIC_VALUES).all(|(v, r)| *v == Nat::from(r));

    let c = encrypt(&public, &Plaintext(Nat::from(REFERENCE_PLAINTEXT))).map_err(internal)?;
    let printed = decrypt(&private, &Ciphertext(Nat::from(PRINTED_CIPHERTEXT)));

    let table = airplane_table_plan().map_err(internal)?;
    let seqs = issue_sequence(&table, &private).map_err(internal)?;
    let (challenge, _) = challenge_for_plaintexts(
        &public,
        Mode::Sequence,
        MergeRule::Sum,
        table.len(),
        "demo".into(),
        vec![Nat::from(REFERENCE_PLAINTEXT)],
    )
    .map_err(internal)?;
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let columns = u
        .names()
        .iter()
        .map(|h| token_respond(&TokenShare::Sequence(seqs[h].clone()), &challenge, NullPolicy::One, &mut rng))
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    let responses: Vec<Vec<String>> = (0..table.len())
        .map(|i| columns.iter().map(|r| r.values[i].to_string()).collect())
        .collect();

    let table_report = audit_2919(&table, &private, &expected)?;
    let expr = parse(AIRPLANE_POLICY, &u).map_err(internal)?;
    let family = authorized_family(&expr, &u, Some(AIRPLANE_MAX_SIZE)).map_err(internal)?;
    let packed = slots_packed(&family, &u, 12).map_err(internal)?;
    let packed_report = audit_2919(&packed, &private, &expected)?;
    let ok = key_ok && table_report.all_agree() && packed_report.all_agree() && family == expected;

    if as_json {
        let summary = json!({
            "fixture": "airplane",
            "public_key_matches": key_ok,
            "plaintext": REFERENCE_PLAINTEXT,
            "ciphertext": c.0.to_string(),
            "printed_ciphertext": PRINTED_CIPHERTEXT.to_string(),
            "printed_ciphertext_decrypts": printed.is_ok(),
            "responses": responses,
            "printed_last_row": PRINTED_LAST_RESPONSE_ROW,
            "table_plan": audit_summary(&table_report),
            "packed_plan_slots": packed.len(),
            "packed_plan": audit_summary(&packed_report),
            "accepted_exactly_listed_groups": ok,
        });
        println!("{}", serde_json::to_string_pretty(&summary).expect("json value"));
    } else {
        println!("reference key: n = 12, p = {REFERENCE_MODULUS}, s = {REFERENCE_EXPONENT}");
        for (i, v) in public.values().iter().enumerate() {
            println!("  v[{i}] = {v}");
        }
        println!("public values match the reference table: {key_ok}\n");
        println!("m = {REFERENCE_PLAINTEXT} ({REFERENCE_PLAINTEXT:012b}) encrypts to c = {}", c.0);
        println!(
            "erratum: the value printed as this ciphertext, {PRINTED_CIPHERTEXT}, is not a ciphertext ({})\n",
            match &printed {
                Ok(m) => format!("decrypts to {}", m.0),
                Err(e) => e.to_string(),
            }
        );
        println!("share sequences (seven-slot table):");
        print!("{}", plan_table(&table, private.primes()));
        println!("\nresponses to c with null response 1:");
        let mut header = vec!["slot".to_owned()];
        header.extend(u.names().iter().cloned());
        let rows: Vec<Vec<String>> = responses
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = vec![(i + 1).to_string()];
                row.extend(r.iter().cloned());
                row
            })
            .collect();
        print!("{}", render_table(&header, &rows));
        println!(
            "erratum: the last row is printed as {:?}; B holds the second part there, so B answers 2880 and C answers 1\n",
            PRINTED_LAST_RESPONSE_ROW
        );
        print_audit("seven-slot table", &table_report);
        print_audit(&format!("compiled packed plan ({} slots)", packed.len()), &packed_report);
        println!("accepted family equals the 16 listed groups: {ok}");
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Failure("airplane audit does not match the listed groups".into()))
    }
}

fn print_audit(name: &str, report: &groupauth::protocol::AuditReport<Nat>) {
    let u = &report.universe;
    let accepted = &report.trials[0].accepted;
    let rejected: GroupFamily = u.all_groups().filter(|g| !accepted.contains(g)).collect();
    println!("{name}: all 31 subsets, sum merge, null 1, m = {REFERENCE_PLAINTEXT}");
    println!("  accepted ({}): {}", accepted.len(), u.label_family(accepted).join(" "));
    println!("  rejected ({}): {}", rejected.len(), u.label_family(&rejected).join(" "));
}

fn small(as_json: bool) -> CliResult {
    let (public, private) = small_keys::<Nat>().map_err(internal)?;
    let u = Universe::from_list(SMALL_HOLDERS).map_err(internal)?;
    let expr = parse(SMALL_POLICY, &u).map_err(internal)?;
    let indices: Vec<usize> = (0..8).collect();
    let split = bl_split(&expr, &indices, &mut Partitioner::BalancedContiguous).map_err(internal)?;
    let shares = issue_monotone(&split, &private).map_err(internal)?;
    let m = Nat::from(SMALL_PLAINTEXT);
    let (challenge, _) =
        challenge_for_plaintexts(&public, Mode::Monotone, MergeRule::Or, 1, "demo".into(), vec![m.clone()])
            .map_err(internal)?;
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let responses = u
        .names()
        .iter()
        .map(|h| token_respond(&TokenShare::Monotone(shares[h].clone()), &challenge, NullPolicy::One, &mut rng))
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let merges = pairs
        .iter()
        .map(|&(a, b)| merge_monotone(&[responses[a].clone(), responses[b].clone()]))
        .collect::<Result<Vec<_>, _>>()
        .map_err(internal)?;

    let expected: GroupFamily = [&["A1", "A2"][..], &["A1", "A3"], &["A1", "A2", "A3"]]
        .iter()
        .map(|g| u.group(g))
        .collect::<Result<_, _>>()
        .map_err(internal)?;
    let issued = IssuedShares::monotone(u.clone(), shares.clone()).map_err(internal)?;
    let report = audit_with_plaintexts(
        &private,
        &issued,
        &expected,
        &AuditConfig::default_for(Mode::Monotone),
        &[vec![m.clone()]],
        &mut rng,
    )
    .map_err(internal)?;
    let ok = challenge.ciphertexts[0].0 == Nat::from(SMALL_CIPHERTEXT) && report.all_agree();

    if as_json {
        let summary = json!({
            "fixture": "small",
            "plaintext": SMALL_PLAINTEXT,
            "ciphertext": challenge.ciphertexts[0].0.to_string(),
            "shares": shares.iter().map(|(h, s)| (h.clone(), s.subset.primes().map(|p| p.to_string()).collect::<Vec<_>>())).collect::<std::collections::BTreeMap<_, _>>(),
            "contributions": responses.iter().map(|r| r.values[0].to_string()).collect::<Vec<_>>(),
            "pair_merges": pairs.iter().zip(&merges).map(|(&(a, b), v)| json!({"group": format!("{}+{}", u.name(a), u.name(b)), "merged": v.to_string()})).collect::<Vec<_>>(),
            "audit": audit_summary(&report),
            "accepted_exactly_expected": ok,
        });
        println!("{}", serde_json::to_string_pretty(&summary).expect("json value"));
    } else {
        println!("small system: n = 8, p = {SMALL_MODULUS}, s = {SMALL_EXPONENT}");
        println!("policy: {expr}");
        for (h, s) in &shares {
            let primes: Vec<String> = s.subset.primes().map(|p| p.to_string()).collect();
            println!("  {h}: {{{}}}", primes.join(", "));
        }
        println!("m = {SMALL_PLAINTEXT} encrypts to c = {}", challenge.ciphertexts[0].0);
        for (h, r) in u.names().iter().zip(&responses) {
            println!("  {h} contributes {}", r.values[0]);
        }
        for (&(a, b), v) in pairs.iter().zip(&merges) {
            let verdict = if *v == m { "accepted" } else { "rejected" };
            println!("  {} + {}: OR = {v} ({verdict})", u.name(a), u.name(b));
        }
        let accepted = &report.trials[0].accepted;
        println!("accepted subsets: {}", u.label_family(accepted).join(" "));
        println!("matches the intended groups: {ok}");
    }
    if ok {
        Ok(())
    } else {
        Err(CliError::Failure("small example does not reproduce".into()))
    }
}
