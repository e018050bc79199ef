use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use groupauth::nscrypt::{keygen as generate, KeySpec, ModulusChoice};
use groupauth::policy::{authorized_family, parse, GroupFamily, PolicyExpr, Universe};
use groupauth::protocol::{
    audit as run_audit, audit_with_plaintexts, challenge_for_plaintexts, make_challenge,
    new_session_id, token_respond, verify_responses, AuditConfig, AuditReport, MergeRule, Mode,
};
use groupauth::sharesplit::{
    bl_split, issue_monotone, issue_sequence, slots_baseline, slots_packed, Partitioner, SlotPlan,
};
use groupauth::wire::{kind_of, token_from_json, Wire};
use groupauth::{IssuedShares, Nat, PrivateKey, PublicKey, ResponseVector, VerifierState};
use rand::Rng;
use serde_json::json;

use crate::{load, read_file, rng_from, write_file, CliError, CliResult, MergeArg, ModeArg, NullArg};

fn parse_nat(flag: &str, text: &str) -> CliResult<Nat> {
    text.parse()
        .map_err(|_| CliError::Usage(format!("{flag}: '{text}' is not a decimal integer")))
}

fn parse_policy(policy: &str, universe: &str) -> CliResult<(Universe, PolicyExpr)> {
    let universe = Universe::from_list(universe)?;
    let expr = parse(policy, &universe).map_err(|e| CliError::Usage(format!("--policy: {e}")))?;
    Ok((universe, expr))
}

fn default_merge(mode: Mode) -> MergeRule {
    match mode {
        Mode::Monotone => MergeRule::Or,
        Mode::Sequence => MergeRule::Sum,
    }
}

/// Plain fixed-width table.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned()
    };
    let mut out = line(header);
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// One row per slot: each holder's primes and the groups the slot admits.
pub fn plan_table(plan: &SlotPlan, primes: &[Nat]) -> String {
    let universe = plan.universe();
    let mut header = vec!["slot".to_owned()];
    header.extend(universe.names().iter().cloned());
    header.push("groups".into());
    let rows: Vec<Vec<String>> = plan
        .slots()
        .iter()
        .enumerate()
        .map(|(i, slot)| {
            let mut row = vec![(i + 1).to_string()];
            for h in 0..universe.len() {
                row.push(match slot.part_of(h) {
                    Some(p) => slot.parts()[p]
                        .iter()
                        .map(|&k| primes[k].to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    None => "-".into(),
                });
            }
            row.push(universe.label_family(&slot.authorized_groups()).join(" "));
            row
        })
        .collect();
    render_table(&header, &rows)
}

pub fn audit_summary(report: &AuditReport<Nat>) -> serde_json::Value {
    let u = &report.universe;
    let label_counts = |m: BTreeMap<groupauth::policy::Group, usize>| -> serde_json::Map<String, serde_json::Value> {
        m.into_iter().map(|(g, n)| (u.label(g), json!(n))).collect()
    };
    let subsets: Vec<_> = report
        .acceptance_counts()
        .into_iter()
        .map(|(g, n)| json!({"group": u.label(g), "expected": report.expected.contains(&g), "accepted": n}))
        .collect();
    json!({
        "trials": report.trials.len(),
        "all_agree": report.all_agree(),
        "subsets": subsets,
        "false_accepts": label_counts(report.false_accepts()),
        "false_rejects": label_counts(report.false_rejects()),
    })
}

pub fn audit_text(report: &AuditReport<Nat>) -> String {
    let u = &report.universe;
    let trials = report.trials.len();
    let rows: Vec<Vec<String>> = report
        .acceptance_counts()
        .into_iter()
        .map(|(g, n)| {
            let expected = report.expected.contains(&g);
            let agrees = if expected { n == trials } else { n == 0 };
            let mark = if agrees { "" } else { "  <-- mismatch" };
            vec![
                u.label(g),
                if expected { "yes" } else { "no" }.into(),
                format!("{n}/{trials}{mark}"),
            ]
        })
        .collect();
    let header = ["group", "expected", "accepted"].map(String::from);
    let agreeing = report.trials.iter().filter(|t| t.agrees).count();
    format!(
        "{}{agreeing}/{trials} trials accepted exactly the expected family\n",
        render_table(&header, &rows)
    )
}

#[derive(Args, Debug)]
pub struct KeygenArgs {
    /// Number of small primes (message bits).
    #[arg(long = "n", value_name = "COUNT")]
    n: usize,
    /// Hex seed for the modulus and exponent draws.
    #[arg(long, value_name = "HEX")]
    seed: Option<String>,
    /// Use this prime modulus.
    #[arg(long, value_name = "DEC")]
    force_p: Option<String>,
    /// Use this secret exponent.
    #[arg(long, value_name = "DEC")]
    force_s: Option<String>,
    /// Draw the modulus at random between the prime product and twice it,
    /// instead of taking the least prime above the product.
    #[arg(long, conflicts_with = "force_p")]
    random_modulus: bool,
    #[arg(short, long, value_name = "DIR")]
    out: PathBuf,
}

pub fn keygen(args: KeygenArgs) -> CliResult {
    let modulus = match (&args.force_p, args.random_modulus) {
        (Some(p), _) => ModulusChoice::Fixed(parse_nat("--force-p", p)?),
        (None, true) => ModulusChoice::RandomAbove,
        (None, false) => ModulusChoice::LeastAbove,
    };
    let exponent = args.force_s.as_deref().map(|s| parse_nat("--force-s", s)).transpose()?;
    let spec = KeySpec {
        prime_count: args.n,
        modulus,
        exponent,
    };
    let mut rng = rng_from(args.seed.as_deref())?;
    let (public, private) = generate(&spec, &mut rng)?;
    write_file(&args.out.join("public.json"), &public.to_json())?;
    write_file(&args.out.join("private.json"), &private.to_json())?;
    println!("n = {}, p = {}", public.prime_count(), public.modulus());
    for (i, v) in public.values().iter().enumerate() {
        println!("v[{i}] = {v}");
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionArg {
    Balanced,
    Random,
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    #[arg(long, value_name = "EXPR")]
    policy: String,
    /// Comma-separated holder names.
    #[arg(long, value_name = "A,B,...")]
    universe: String,
    /// Largest group size admitted (sequence mode).
    #[arg(long, value_name = "K")]
    max_size: Option<usize>,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Merge rule the verifier will use; XOR is checked against shared parts.
    #[arg(long, value_enum)]
    merge: Option<MergeArg>,
    /// Pack several groups into each slot.
    #[arg(long)]
    pack: bool,
    /// How AND nodes split prime indices (monotone mode).
    #[arg(long, value_enum, default_value = "balanced")]
    partition: PartitionArg,
    #[arg(long, value_name = "HEX")]
    seed: Option<String>,
    #[arg(long, value_name = "FILE")]
    key: PathBuf,
    #[arg(short, long, value_name = "DIR")]
    out: PathBuf,
}

fn share_path(dir: &Path, holder: &str) -> PathBuf {
    dir.join(format!("share_{holder}.json"))
}

pub fn compile(args: CompileArgs) -> CliResult {
    let (universe, expr) = parse_policy(&args.policy, &args.universe)?;
    let private: PrivateKey = load(&args.key)?;
    let mode = Mode::from(args.mode);
    let merge = args.merge.map(MergeRule::from).unwrap_or(default_merge(mode));
    match mode {
        Mode::Monotone => {
            if !expr.is_monotone() {
                return Err(CliError::Failure(
                    "policy is not monotone (it uses 'not'); compile it with --mode sequence".into(),
                ));
            }
            if args.max_size.is_some() {
                return Err(CliError::Usage("--max-size needs --mode sequence".into()));
            }
            if merge != MergeRule::Or {
                return Err(CliError::Usage("monotone shares are merged with OR".into()));
            }
            let mut partitioner = match args.partition {
                PartitionArg::Balanced => Partitioner::BalancedContiguous,
                PartitionArg::Random => Partitioner::random(rng_from(args.seed.as_deref())?.gen()),
            };
            let indices: Vec<usize> = (0..private.prime_count()).collect();
            let split = bl_split(&expr, &indices, &mut partitioner)?;
            let shares = issue_monotone(&split, &private)?;
            for (holder, share) in &shares {
                write_file(&share_path(&args.out, holder), &share.to_json())?;
                let primes: Vec<String> = share.subset.primes().map(|p| p.to_string()).collect();
                println!("{holder}: {}", primes.join(","));
            }
            for name in universe.names().iter().filter(|n| !shares.contains_key(*n)) {
                println!("{name}: no share (not named by the policy)");
            }
        }
        Mode::Sequence => {
            if merge == MergeRule::Or {
                return Err(CliError::Usage("sequence shares are merged with sum or xor".into()));
            }
            let family = authorized_family(&expr, &universe, args.max_size)?;
            if family.is_empty() {
                return Err(CliError::Failure("policy admits no group".into()));
            }
            let n = private.prime_count();
            let plan = if args.pack {
                slots_packed(&family, &universe, n)?
            } else {
                slots_baseline(&family, &universe, n)?
            };
            plan.check_exact(&family)?;
            if merge == MergeRule::Xor && plan.slots().iter().any(|s| s.classes().iter().any(|c| c.len() > 1)) {
                eprintln!(
                    "warning: some slot gives one part to several holders; under XOR their equal \
                     responses cancel in pairs, so supersets can be accepted"
                );
            }
            for (holder, seq) in issue_sequence(&plan, &private)? {
                write_file(&share_path(&args.out, &holder), &seq.to_json())?;
            }
            print!("{}", plan_table(&plan, private.primes()));
            println!("{} groups in {} slots", family.len(), plan.len());
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct ChallengeArgs {
    #[arg(long = "pub", value_name = "FILE")]
    public: PathBuf,
    /// Defaults to sequence when --slots is given, monotone otherwise.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    merge: Option<MergeArg>,
    /// Number of slots in the share sequences.
    #[arg(long, value_name = "K")]
    slots: Option<usize>,
    /// Encrypt a fresh plaintext for every slot.
    #[arg(long)]
    per_index_random: bool,
    /// Use these plaintexts instead of random ones.
    #[arg(long, value_name = "DEC", num_args = 1.., conflicts_with = "per_index_random")]
    plaintext: Vec<String>,
    #[arg(long, value_name = "HEX")]
    seed: Option<String>,
    #[arg(short, long, value_name = "FILE")]
    out: PathBuf,
    #[arg(long, value_name = "FILE")]
    state: PathBuf,
}

pub fn challenge(args: ChallengeArgs) -> CliResult {
    let public: PublicKey = load(&args.public)?;
    let mode = args
        .mode
        .map(Mode::from)
        .unwrap_or(if args.slots.is_some() { Mode::Sequence } else { Mode::Monotone });
    let merge = args.merge.map(MergeRule::from).unwrap_or(default_merge(mode));
    let slots = args.slots.unwrap_or(1);
    let mut rng = rng_from(args.seed.as_deref())?;
    let (challenge, state) = if args.plaintext.is_empty() {
        make_challenge(&public, mode, merge, slots, args.per_index_random, &mut rng)?
    } else {
        let plaintexts = args
            .plaintext
            .iter()
            .map(|m| parse_nat("--plaintext", m))
            .collect::<CliResult<Vec<_>>>()?;
        challenge_for_plaintexts(&public, mode, merge, slots, new_session_id(&mut rng), plaintexts)?
    };
    write_file(&args.out, &challenge.to_json())?;
    write_file(&args.state, &state.to_json())?;
    println!(
        "session {}: {} ciphertext(s), {} slot(s)",
        challenge.session_id,
        challenge.ciphertexts.len(),
        challenge.slot_count
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct RespondArgs {
    #[arg(long, value_name = "FILE")]
    share: PathBuf,
    #[arg(long, value_name = "FILE")]
    challenge: PathBuf,
    /// Answer at slots without a share.
    #[arg(long, value_enum, default_value = "one")]
    null: NullArg,
    #[arg(long, value_name = "HEX")]
    seed: Option<String>,
    #[arg(short, long, value_name = "FILE")]
    out: PathBuf,
}

pub fn respond(args: RespondArgs) -> CliResult {
    let text = read_file(&args.share)?;
    let token = token_from_json::<Nat>(&text)
        .map_err(|e| CliError::Usage(format!("{}: schema error: {e}", args.share.display())))?;
    let challenge: groupauth::Challenge = load(&args.challenge)?;
    let mut rng = rng_from(args.seed.as_deref())?;
    let response = token_respond(&token, &challenge, args.null.into(), &mut rng)?;
    write_file(&args.out, &response.to_json())?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_name = "FILE")]
    state: PathBuf,
    #[arg(long, value_name = "FILE", num_args = 1.., required = true)]
    responses: Vec<PathBuf>,
    /// Override the merge rule recorded in the state.
    #[arg(long, value_enum)]
    merge: Option<MergeArg>,
    /// Keep merged values in the verdict (they equal the secret on success).
    #[arg(long)]
    diagnostic: bool,
    /// Print the verdict document instead of a sentence.
    #[arg(long)]
    json: bool,
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn verify(args: VerifyArgs) -> CliResult {
    let state: VerifierState = load(&args.state)?;
    let responses = args
        .responses
        .iter()
        .map(|p| load::<ResponseVector>(p))
        .collect::<CliResult<Vec<_>>>()?;
    let mut verdict = verify_responses(&state, &responses, args.merge.map(MergeRule::from))?;
    if !args.diagnostic {
        verdict = verdict.redacted();
    }
    if let Some(out) = &args.out {
        write_file(out, &verdict.to_json())?;
    }
    if args.json {
        print!("{}", verdict.to_json());
    } else {
        match verdict.matching_slot {
            Some(slot) => println!("accepted (slot {})", slot + 1),
            None => println!("rejected"),
        }
    }
    if verdict.accepted {
        Ok(())
    } else {
        Err(CliError::Failure("group not authenticated".into()))
    }
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[arg(long, value_name = "FILE")]
    key: PathBuf,
    /// Directory of share files.
    #[arg(long, value_name = "DIR")]
    shares: PathBuf,
    #[arg(long, value_name = "EXPR")]
    policy: String,
    #[arg(long, value_name = "A,B,...")]
    universe: String,
    #[arg(long, value_name = "K")]
    max_size: Option<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, value_name = "HEX")]
    seed: Option<String>,
    #[arg(long, value_enum)]
    merge: Option<MergeArg>,
    #[arg(long, value_enum, default_value = "one")]
    null: NullArg,
    #[arg(long)]
    per_index_random: bool,
    /// Audit a single challenge for this plaintext.
    #[arg(long, value_name = "DEC", conflicts_with = "per_index_random")]
    plaintext: Option<String>,
    #[arg(long)]
    json: bool,
}

fn load_share_dir(dir: &Path, universe: &Universe) -> CliResult<IssuedShares> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut tokens = Vec::new();
    for path in paths {
        let text = read_file(&path)?;
        if !kind_of(&text).is_ok_and(|k| k.starts_with("share-")) {
            continue;
        }
        let token = token_from_json::<Nat>(&text)
            .map_err(|e| CliError::Usage(format!("{}: schema error: {e}", path.display())))?;
        tokens.push(token);
    }
    if tokens.is_empty() {
        return Err(CliError::Usage(format!("no share files in {}", dir.display())));
    }
    Ok(IssuedShares::from_tokens(universe.clone(), tokens)?)
}

pub fn audit(args: AuditArgs) -> CliResult {
    let (universe, expr) = parse_policy(&args.policy, &args.universe)?;
    let private: PrivateKey = load(&args.key)?;
    let shares = load_share_dir(&args.shares, &universe)?;
    let expected: GroupFamily = authorized_family(&expr, &universe, args.max_size)?;
    let config = AuditConfig {
        merge: args.merge.map(MergeRule::from).unwrap_or(default_merge(shares.mode())),
        null_policy: args.null.into(),
        per_index_random: args.per_index_random,
    };
    let mut rng = rng_from(args.seed.as_deref())?;
    let report = match &args.plaintext {
        Some(m) => {
            let m = parse_nat("--plaintext", m)?;
            audit_with_plaintexts(&private, &shares, &expected, &config, &[vec![m]], &mut rng)?
        }
        None => run_audit(&private, &shares, &expected, &config, args.trials, &mut rng)?,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&audit_summary(&report)).expect("json value"));
    } else {
        print!("{}", audit_text(&report));
    }
    if report.all_agree() {
        Ok(())
    } else {
        Err(CliError::Failure("accepted groups differ from the policy".into()))
    }
}
