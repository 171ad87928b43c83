//! State-indexed forensic command menus, rendering with sentinel semantics,
//! and plan execution over pluggable runners.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ActionId, StateId};

/// Sentinel returned when the action index exceeds the state's menu.
pub const SENTINEL_ACTION_OUT_OF_RANGE: &str = "action out of list size";
/// Sentinel returned when the state has no menu entry.
pub const SENTINEL_TRANSITIONAL_STATE: &str = "transitional state";
/// Commands with this prefix route to the hash-lookup client instead of the
/// command runner.
pub const HASH_SUBMIT_PREFIX: &str = "vt-submit ";

const PLACEHOLDERS: [&str; 4] = ["pid", "image", "profile", "outdir"];

/// Values substituted into command templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandContext {
    pub pid: u32,
    pub image: String,
    pub profile: String,
    pub outdir: String,
}

impl Default for CommandContext {
    fn default() -> Self {
        CommandContext {
            pid: 340,
            image: "memdump.raw".to_string(),
            profile: "Win7SP1x64".to_string(),
            outdir: "artifacts".to_string(),
        }
    }
}

impl CommandContext {
    fn value_of(&self, placeholder: &str) -> Option<String> {
        match placeholder {
            "pid" => Some(self.pid.to_string()),
            "image" => Some(self.image.clone()),
            "profile" => Some(self.profile.clone()),
            "outdir" => Some(self.outdir.clone()),
            _ => None,
        }
    }
}

/// A fully rendered command line, or one of the two sentinel strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedCommand {
    pub text: String,
    pub is_sentinel: bool,
}

impl RenderedCommand {
    /// Classifies by content, so `is_sentinel` always mirrors the text.
    pub fn from_text(text: String) -> Self {
        let is_sentinel =
            text == SENTINEL_ACTION_OUT_OF_RANGE || text == SENTINEL_TRANSITIONAL_STATE;
        RenderedCommand { text, is_sentinel }
    }
}

impl fmt::Display for RenderedCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CommandError {
    #[error("template for state {state} action {action} references unknown placeholder {{{name}}}")]
    UnboundPlaceholder {
        state: StateId,
        action: ActionId,
        name: String,
    },
    #[error("menu entry for state {state} has an empty template at index {index}")]
    EmptyTemplate { state: StateId, index: usize },
    #[error("menu parse error: {0}")]
    Parse(String),
    #[error("plan parse error at line {line}: {message}")]
    PlanParse { line: usize, message: String },
    #[error("step {step} failed with exit status {status}")]
    RunnerFailure { step: usize, status: i32 },
}

/// Per-state ordered lists of command templates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CommandMenu {
    pub entries: BTreeMap<StateId, Vec<String>>,
}

impl CommandMenu {
    /// Total number of templates across all states.
    pub fn template_count(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        let doc: BTreeMap<usize, &Vec<String>> =
            self.entries.iter().map(|(s, v)| (s.0, v)).collect();
        let mut text = serde_json::to_string_pretty(&doc).expect("menu serializes");
        text.push('\n');
        text
    }

    /// Parses and validates a menu document: templates must be nonempty and
    /// may only use the supported placeholders.
    pub fn from_json(source: &str) -> Result<Self, CommandError> {
        let doc: BTreeMap<usize, Vec<String>> =
            serde_json::from_str(source).map_err(|e| CommandError::Parse(e.to_string()))?;
        let menu = CommandMenu {
            entries: doc
                .into_iter()
                .map(|(s, templates)| (StateId(s), templates))
                .collect(),
        };
        menu.validate()?;
        Ok(menu)
    }

    pub fn validate(&self) -> Result<(), CommandError> {
        for (&state, templates) in &self.entries {
            for (index, template) in templates.iter().enumerate() {
                if template.is_empty() {
                    return Err(CommandError::EmptyTemplate { state, index });
                }
                // Rendering against a throwaway context surfaces unknown
                // placeholders without touching the caller's values.
                substitute(template, &CommandContext::default(), state, ActionId(index))?;
            }
        }
        Ok(())
    }
}

/// Replaces `{pid}`, `{image}`, `{profile}`, `{outdir}` tokens. A brace
/// group is a placeholder only when it wraps a bare `[a-z_]+` word, so awk
/// bodies like `{print $1}` pass through untouched; an unknown bare word is
/// a configuration error.
fn substitute(
    template: &str,
    ctx: &CommandContext,
    state: StateId,
    action: ActionId,
) -> Result<String, CommandError> {
    let mut out = String::with_capacity(template.len());
    let chars: Vec<char> = template.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '{' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j].is_ascii_lowercase() || chars[j] == '_') {
                j += 1;
            }
            if j > i + 1 && j < chars.len() && chars[j] == '}' {
                let name: String = chars[i + 1..j].iter().collect();
                match ctx.value_of(&name) {
                    Some(value) => {
                        out.push_str(&value);
                        i = j + 1;
                        continue;
                    }
                    None if PLACEHOLDERS.contains(&name.as_str()) => unreachable!(),
                    None => {
                        return Err(CommandError::UnboundPlaceholder {
                            state,
                            action,
                            name,
                        });
                    }
                }
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    Ok(out)
}

/// Renders the command for (state, action): a substituted template when both
/// are known, otherwise the matching sentinel. Never fails on out-of-range
/// inputs; only a misconfigured template errors.
pub fn create_command(
    menu: &CommandMenu,
    state: StateId,
    action: ActionId,
    ctx: &CommandContext,
) -> Result<RenderedCommand, CommandError> {
    let Some(templates) = menu.entries.get(&state) else {
        return Ok(RenderedCommand::from_text(
            SENTINEL_TRANSITIONAL_STATE.to_string(),
        ));
    };
    let Some(template) = templates.get(action.0) else {
        return Ok(RenderedCommand::from_text(
            SENTINEL_ACTION_OUT_OF_RANGE.to_string(),
        ));
    };
    Ok(RenderedCommand::from_text(substitute(
        template, ctx, state, action,
    )?))
}

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

/// Where a plan came from: a trajectory label and the source graph's hash.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanProvenance {
    pub trajectory: String,
    pub graph_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub state: StateId,
    pub action: ActionId,
    pub command: RenderedCommand,
}

/// An ordered, rendered investigation plan. Sentinel steps are retained and
/// flagged rather than dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandPlan {
    pub steps: Vec<PlanStep>,
    pub provenance: PlanProvenance,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanStepDoc {
    state: usize,
    action: usize,
    command: String,
    sentinel: bool,
}

impl CommandPlan {
    pub fn sentinel_count(&self) -> usize {
        self.steps.iter().filter(|s| s.command.is_sentinel).count()
    }

    /// One JSON object per step, LF-separated.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let doc = PlanStepDoc {
                state: step.state.0,
                action: step.action.0,
                command: step.command.text.clone(),
                sentinel: step.command.is_sentinel,
            };
            out.push_str(&serde_json::to_string(&doc).expect("plan step serializes"));
            out.push('\n');
        }
        out
    }

    /// Parses a JSON-lines plan export. Provenance is not part of the wire
    /// format and comes back empty.
    pub fn from_jsonl(source: &str) -> Result<Self, CommandError> {
        let mut steps = Vec::new();
        for (index, line) in source.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: PlanStepDoc =
                serde_json::from_str(line).map_err(|e| CommandError::PlanParse {
                    line: index + 1,
                    message: e.to_string(),
                })?;
            steps.push(PlanStep {
                state: StateId(doc.state),
                action: ActionId(doc.action),
                command: RenderedCommand {
                    text: doc.command,
                    is_sentinel: doc.sentinel,
                },
            });
        }
        Ok(CommandPlan {
            steps,
            provenance: PlanProvenance::default(),
        })
    }
}

/// Maps `create_command` over a trajectory, preserving order and length.
pub fn render_plan(
    trajectory: &[(StateId, ActionId)],
    menu: &CommandMenu,
    ctx: &CommandContext,
    provenance: PlanProvenance,
) -> Result<CommandPlan, CommandError> {
    let steps = trajectory
        .iter()
        .map(|&(state, action)| {
            create_command(menu, state, action, ctx).map(|command| PlanStep {
                state,
                action,
                command,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CommandPlan { steps, provenance })
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// Outcome of running one command: exit status, wall seconds, captured output.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: i32,
    pub seconds: f64,
    pub output: String,
}

/// Executes command lines. Implementations report their own wall time so
/// simulated runners stay exactly deterministic.
pub trait CommandRunner {
    fn run(&mut self, command: &str) -> RunOutcome;
}

/// Verdict record returned by a hash-lookup client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashVerdict {
    pub digest: String,
    pub malicious: Option<bool>,
    pub source: String,
}

/// Result of dispatching a hash submission.
#[derive(Debug, Clone, PartialEq)]
pub struct HashLookup {
    pub verdict: HashVerdict,
    pub seconds: f64,
}

/// External hash-reputation interface. The dry-run client answers "unknown"
/// without any network traffic.
pub trait HashLookupClient {
    fn lookup(&self, submission: &str) -> HashLookup;
}

/// Echoes every command with exit status 0 and zero duration.
#[derive(Debug, Clone, Copy, Default)]
pub struct DryRunner;

impl CommandRunner for DryRunner {
    fn run(&mut self, command: &str) -> RunOutcome {
        RunOutcome {
            status: 0,
            seconds: 0.0,
            output: format!("dry-run: {command}"),
        }
    }
}

/// Answers every submission with an unknown verdict, instantly.
#[derive(Debug, Clone, Copy, Default)]
pub struct DryHashClient;

impl HashLookupClient for DryHashClient {
    fn lookup(&self, submission: &str) -> HashLookup {
        HashLookup {
            verdict: HashVerdict {
                digest: submission.to_string(),
                malicious: None,
                source: "dry-run".to_string(),
            },
            seconds: 0.0,
        }
    }
}

/// One executed plan step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionRecord {
    pub step_index: usize,
    pub command: String,
    pub status: i32,
    pub seconds: f64,
    pub output: String,
}

#[derive(Debug, Clone, Copy)]
pub struct ExecuteOptions {
    pub skip_sentinels: bool,
    pub fail_fast: bool,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        ExecuteOptions {
            skip_sentinels: true,
            fail_fast: false,
        }
    }
}

/// Runs the plan in order. Sentinel steps are skipped by default;
/// hash-submission steps (`vt-submit ...`) route to the hash-lookup client.
/// Failures are recorded in the log unless `fail_fast` is set.
pub fn execute_plan(
    plan: &CommandPlan,
    runner: &mut dyn CommandRunner,
    hash_client: &dyn HashLookupClient,
    options: ExecuteOptions,
) -> Result<Vec<ExecutionRecord>, CommandError> {
    let mut log = Vec::new();
    for (step_index, step) in plan.steps.iter().enumerate() {
        if step.command.is_sentinel && options.skip_sentinels {
            continue;
        }
        let command = step.command.text.as_str();
        let record = if let Some(submission) = command.strip_prefix(HASH_SUBMIT_PREFIX) {
            let lookup = hash_client.lookup(submission.trim());
            ExecutionRecord {
                step_index,
                command: command.to_string(),
                status: 0,
                seconds: lookup.seconds,
                output: format!(
                    "hash lookup via {}: digest {} -> {}",
                    lookup.verdict.source,
                    lookup.verdict.digest,
                    match lookup.verdict.malicious {
                        Some(true) => "malicious",
                        Some(false) => "benign",
                        None => "unknown",
                    }
                ),
            }
        } else {
            let outcome = runner.run(command);
            ExecutionRecord {
                step_index,
                command: command.to_string(),
                status: outcome.status,
                seconds: outcome.seconds,
                output: outcome.output,
            }
        };
        let failed = record.status != 0;
        log.push(record);
        if failed && options.fail_fast {
            let last = log.last().expect("just pushed");
            return Err(CommandError::RunnerFailure {
                step: last.step_index,
                status: last.status,
            });
        }
    }
    Ok(log)
}

// ---------------------------------------------------------------------------
// Default menu
// ---------------------------------------------------------------------------

/// The shipped menu: 109 templates over the fifteen operational states of
/// the default graph (the thirteen phase starts, the wrap-up state, and the
/// terminal), between 3 and 10 per state.
pub fn default_menu() -> CommandMenu {
    let mut entries: BTreeMap<StateId, Vec<String>> = BTreeMap::new();
    let mut add = |state: usize, templates: &[&str]| {
        entries.insert(
            StateId(state),
            templates.iter().map(|t| t.to_string()).collect(),
        );
    };

    // Tool acquisition.
    add(0, &[
        "git clone https://github.com/Velocidex/WinPmem.git",
        "git clone https://github.com/volatilityfoundation/volatility3.git",
        "pip install -r volatility3/requirements.txt",
        "python3 volatility3/vol.py --help",
        "mkdir -p {outdir}",
    ]);

    // Live memory acquisition.
    add(5, &[
        "winpmem_mini_x64_rc2.exe {image}",
        "certutil -hashfile {image} SHA256",
        "powershell -Command Get-FileHash {image} -Algorithm SHA256",
        "copy {image} {outdir}",
        "fsutil file queryfileid {image}",
        "wmic os get lastbootuptime",
        "systeminfo",
    ]);

    // System information and registry overview.
    add(10, &[
        "python3 volatility3/vol.py -f {image} windows.info",
        "python3 volatility3/vol.py -f {image} windows.registry.hivescan",
        "python3 volatility3/vol.py -f {image} windows.registry.hivelist",
        "python3 volatility3/vol.py -f {image} windows.verinfo",
        "python3 volatility3/vol.py -f {image} windows.envars",
        "python3 volatility3/vol.py -f {image} windows.sessions",
        "python3 volatility3/vol.py -f {image} banners.Banners",
        "python3 volatility3/vol.py -f {image} windows.crashinfo",
    ]);

    // Profile-confirmed process enumeration.
    add(15, &[
        "python2 volatility/vol.py -f {image} --profile={profile} pslist",
        "python3 volatility3/vol.py -f {image} windows.pslist",
        "python3 volatility3/vol.py -f {image} windows.psscan",
        "python3 volatility3/vol.py -f {image} windows.pstree",
        "python3 volatility3/vol.py -f {image} windows.cmdline",
        "python3 volatility3/vol.py -f {image} windows.getsids --pid {pid}",
        "python3 volatility3/vol.py -f {image} windows.privileges --pid {pid}",
    ]);

    // AWK feature extraction.
    add(20, &[
        "python3 volatility3/vol.py -f {image} windows.pslist | awk '{print $1, $2, $3}' > {outdir}/features.txt",
        "python3 volatility3/vol.py -f {image} windows.pslist | awk '$3 == {pid} {print $0}' >> {outdir}/features.txt",
        "python3 volatility3/vol.py -f {image} windows.psscan | awk 'NR > 4 {print $2}' > {outdir}/pids.txt",
        "awk 'END {print NR}' {outdir}/features.txt",
        "python3 volatility3/vol.py -f {image} windows.pstree | awk '{print $1}' | sort -u > {outdir}/ppids.txt",
        "awk '!seen[$0]++' {outdir}/features.txt > {outdir}/features.dedup.txt",
        "python3 volatility3/vol.py -f {image} windows.cmdline | awk -v pid={pid} '$1 == pid' > {outdir}/cmdline.txt",
        "wc -l {outdir}/features.txt",
    ]);

    // DLL listing.
    add(25, &[
        "python3 volatility3/vol.py -f {image} windows.dlllist --pid {pid}",
        "python3 volatility3/vol.py -f {image} windows.dlllist > {outdir}/dlllist_all.txt",
        "python3 volatility3/vol.py -f {image} windows.ldrmodules --pid {pid}",
        "grep -i 'no path' {outdir}/dlllist_all.txt",
        "python3 volatility3/vol.py -f {image} -o {outdir} windows.dlllist --pid {pid} --dump",
        "awk '/\\.dll/ {print $NF}' {outdir}/dlllist_all.txt | sort -u",
        "python2 volatility/vol.py -f {image} --profile={profile} dlllist -p {pid}",
    ]);

    // Handle inspection.
    add(30, &[
        "python3 volatility3/vol.py -f {image} windows.handles --pid {pid}",
        "python3 volatility3/vol.py -f {image} windows.handles > {outdir}/handles_all.txt",
        "grep -c File {outdir}/handles_all.txt",
        "grep Mutant {outdir}/handles_all.txt",
        "grep -i key {outdir}/handles_all.txt | head -n 40",
        "python3 volatility3/vol.py -f {image} windows.handles --pid {pid} > {outdir}/handles_{pid}.txt",
        "python2 volatility/vol.py -f {image} --profile={profile} handles -p {pid}",
    ]);

    // Network artefacts.
    add(35, &[
        "python3 volatility3/vol.py -f {image} windows.netstat",
        "python3 volatility3/vol.py -f {image} windows.netscan",
        "python3 volatility3/vol.py -f {image} windows.netstat > {outdir}/netstat.txt",
        "awk '$1 == \"TCPv4\" {print $2, $3}' {outdir}/netstat.txt",
        "grep ESTABLISHED {outdir}/netstat.txt",
        "grep LISTENING {outdir}/netstat.txt | sort",
        "python2 volatility/vol.py -f {image} --profile={profile} netscan",
        "awk '{print $4}' {outdir}/netstat.txt | sort | uniq -c | sort -rn",
    ]);

    // Registry hive discovery.
    add(40, &[
        "python3 volatility3/vol.py -f {image} windows.registry.hivelist",
        "python3 volatility3/vol.py -f {image} windows.registry.hivescan",
        "python3 volatility3/vol.py -f {image} windows.registry.hivelist > {outdir}/hivelist.txt",
        "awk '{print $3}' {outdir}/hivelist.txt | grep -i config",
        "python3 volatility3/vol.py -f {image} windows.registry.certificates",
        "python2 volatility/vol.py -f {image} --profile={profile} hivelist",
        "grep -i ntuser {outdir}/hivelist.txt",
        "python3 volatility3/vol.py -f {image} windows.registry.userassist",
    ]);

    // Registry key listing.
    add(45, &[
        "python3 volatility3/vol.py -f {image} windows.registry.printkey",
        "python3 volatility3/vol.py -f {image} windows.registry.printkey --key 'Software\\Microsoft\\Windows\\CurrentVersion\\Run'",
        "python3 volatility3/vol.py -f {image} windows.registry.printkey --key 'Software\\Microsoft\\Windows\\CurrentVersion\\RunOnce'",
        "python3 volatility3/vol.py -f {image} windows.registry.printkey --key 'SYSTEM\\CurrentControlSet\\Services' > {outdir}/services_keys.txt",
        "python3 volatility3/vol.py -f {image} windows.registry.printkey --key 'SAM\\Domains\\Account\\Users'",
        "python2 volatility/vol.py -f {image} --profile={profile} printkey -K 'Software\\Microsoft\\Windows\\CurrentVersion\\Run'",
        "grep -i 'REG_SZ' {outdir}/services_keys.txt | head -n 40",
        "python3 volatility3/vol.py -f {image} windows.registry.printkey --key 'ControlSet001\\Control\\ComputerName\\ComputerName'",
    ]);

    // Process dump extraction.
    add(50, &[
        "python3 volatility3/vol.py -f {image} -o {outdir} windows.pslist --pid {pid} --dump",
        "python3 volatility3/vol.py -f {image} -o {outdir} windows.memmap --pid {pid} --dump",
        "python3 volatility3/vol.py -f {image} -o {outdir} windows.dumpfiles --pid {pid}",
        "ls -lh {outdir}",
        "file {outdir}/pid.{pid}.dmp",
        "python3 volatility3/vol.py -f {image} windows.malfind --pid {pid}",
        "python2 volatility/vol.py -f {image} --profile={profile} procdump -p {pid} --dump-dir {outdir}",
        "python3 volatility3/vol.py -f {image} windows.vadinfo --pid {pid}",
    ]);

    // Hash verdict lookup.
    add(55, &[
        "sha256sum {outdir}/pid.{pid}.dmp > {outdir}/hashes.txt",
        "md5sum {outdir}/pid.{pid}.dmp >> {outdir}/hashes.txt",
        "vt-submit {outdir}/hashes.txt",
        "awk '{print $1}' {outdir}/hashes.txt | sort -u > {outdir}/digests.txt",
        "vt-submit {outdir}/digests.txt",
        "wc -l {outdir}/digests.txt",
        "cat {outdir}/hashes.txt",
        "sha1sum {outdir}/pid.{pid}.dmp >> {outdir}/hashes.txt",
    ]);

    // Memory string search.
    add(60, &[
        "strings -a {image} > {outdir}/strings.txt",
        "strings -a -el {image} > {outdir}/strings_unicode.txt",
        "grep -i -E 'http|ftp|onion' {outdir}/strings.txt > {outdir}/urls.txt",
        "grep -i -E 'bitcoin|wallet|decrypt' {outdir}/strings.txt",
        "grep -i 'cmd.exe' {outdir}/strings.txt | head -n 40",
        "grep -c . {outdir}/strings.txt",
        "awk 'length($0) > 200' {outdir}/strings.txt > {outdir}/long_strings.txt",
        "grep -i -F '.onion' {outdir}/strings_unicode.txt",
    ]);

    // Findings assembly.
    add(65, &[
        "python3 volatility3/vol.py -f {image} windows.statistics",
        "tar czf {outdir}/evidence_bundle.tar.gz {outdir}",
        "sha256sum {outdir}/evidence_bundle.tar.gz",
        "cp {outdir}/hashes.txt {outdir}/final_report_hashes.txt",
        "printf 'investigation summary for pid {pid}\\n' > {outdir}/report.txt",
        "cat {outdir}/urls.txt >> {outdir}/report.txt",
        "wc -l {outdir}/report.txt",
    ]);

    // Case close-out.
    add(66, &[
        "sha256sum {outdir}/report.txt",
        "cp {outdir}/report.txt {outdir}/case_closed_report.txt",
        "ls -R {outdir}",
        "sha256sum {outdir}/evidence_bundle.tar.gz >> {outdir}/report.txt",
        "printf 'case closed\\n'",
    ]);

    let menu = CommandMenu { entries };
    debug_assert!(menu.validate().is_ok());
    menu
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentinel_for_out_of_range_action() {
        let menu = default_menu();
        let ctx = CommandContext::default();
        // State 0 has 5 templates.
        let rendered = create_command(&menu, StateId(0), ActionId(7), &ctx).unwrap();
        assert_eq!(rendered.text, "action out of list size");
        assert!(rendered.is_sentinel);
    }

    #[test]
    fn sentinel_for_unknown_state() {
        let menu = default_menu();
        let ctx = CommandContext::default();
        let rendered = create_command(&menu, StateId(12), ActionId(0), &ctx).unwrap();
        assert_eq!(rendered.text, "transitional state");
        assert!(rendered.is_sentinel);
    }

    #[test]
    fn substitution_fills_pid() {
        let mut menu = CommandMenu::default();
        menu.entries.insert(
            StateId(30),
            vec!["windows.dlllist --pid {pid}".to_string()],
        );
        let ctx = CommandContext::default();
        let rendered = create_command(&menu, StateId(30), ActionId(0), &ctx).unwrap();
        assert_eq!(rendered.text, "windows.dlllist --pid 340");
        assert!(!rendered.is_sentinel);
    }

    #[test]
    fn awk_braces_pass_through() {
        let mut menu = CommandMenu::default();
        menu.entries.insert(
            StateId(20),
            vec!["vol.py -f {image} windows.pslist | awk '$3 == {pid} {print $0}'".to_string()],
        );
        let ctx = CommandContext {
            image: "mem.raw".into(),
            ..CommandContext::default()
        };
        let rendered = create_command(&menu, StateId(20), ActionId(0), &ctx).unwrap();
        assert_eq!(
            rendered.text,
            "vol.py -f mem.raw windows.pslist | awk '$3 == 340 {print $0}'"
        );
    }

    #[test]
    fn unknown_placeholder_is_a_configuration_error() {
        let mut menu = CommandMenu::default();
        menu.entries
            .insert(StateId(1), vec!["echo {hostname}".to_string()]);
        let ctx = CommandContext::default();
        let err = create_command(&menu, StateId(1), ActionId(0), &ctx).unwrap_err();
        assert_eq!(
            err,
            CommandError::UnboundPlaceholder {
                state: StateId(1),
                action: ActionId(0),
                name: "hostname".to_string()
            }
        );
        assert!(menu.validate().is_err());
    }

    #[test]
    fn default_menu_counts() {
        let menu = default_menu();
        assert_eq!(menu.template_count(), 109);
        for templates in menu.entries.values() {
            assert!((3..=10).contains(&templates.len()));
        }
        assert!(menu.entries[&StateId(0)][0].starts_with("git clone"));
        assert!(menu.validate().is_ok());
    }

    #[test]
    fn menu_round_trips_through_json() {
        let menu = default_menu();
        let reparsed = CommandMenu::from_json(&menu.to_json()).unwrap();
        assert_eq!(menu, reparsed);
    }

    #[test]
    fn render_plan_preserves_order_and_flags_sentinels() {
        let menu = default_menu();
        let ctx = CommandContext::default();
        let trajectory = vec![
            (StateId(0), ActionId(0)),
            (StateId(1), ActionId(0)),
            (StateId(5), ActionId(9)),
        ];
        let plan = render_plan(&trajectory, &menu, &ctx, PlanProvenance::default()).unwrap();
        assert_eq!(plan.steps.len(), 3);
        assert!(!plan.steps[0].command.is_sentinel);
        assert_eq!(plan.steps[1].command.text, "transitional state");
        assert_eq!(plan.steps[2].command.text, "action out of list size");
        assert_eq!(plan.sentinel_count(), 2);
    }

    #[test]
    fn empty_trajectory_renders_empty_plan() {
        let menu = default_menu();
        let plan = render_plan(
            &[],
            &menu,
            &CommandContext::default(),
            PlanProvenance::default(),
        )
        .unwrap();
        assert!(plan.steps.is_empty());
    }

    #[test]
    fn plan_jsonl_round_trip() {
        let menu = default_menu();
        let ctx = CommandContext::default();
        let trajectory = vec![(StateId(0), ActionId(0)), (StateId(3), ActionId(0))];
        let plan = render_plan(&trajectory, &menu, &ctx, PlanProvenance::default()).unwrap();
        let reparsed = CommandPlan::from_jsonl(&plan.to_jsonl()).unwrap();
        assert_eq!(plan.steps, reparsed.steps);
    }

    #[test]
    fn dry_run_executes_all_steps_with_zero_seconds() {
        let menu = default_menu();
        let ctx = CommandContext::default();
        let trajectory: Vec<(StateId, ActionId)> =
            (0..9).map(|i| (StateId(5 * i), ActionId(0))).collect();
        let plan = render_plan(&trajectory, &menu, &ctx, PlanProvenance::default()).unwrap();
        let mut runner = DryRunner;
        let log =
            execute_plan(&plan, &mut runner, &DryHashClient, ExecuteOptions::default()).unwrap();
        assert_eq!(log.len(), 9);
        for record in &log {
            assert_eq!(record.status, 0);
            assert_eq!(record.seconds, 0.0);
        }
    }

    #[test]
    fn sentinel_steps_are_skipped_by_default() {
        let menu = default_menu();
        let ctx = CommandContext::default();
        let trajectory = vec![
            (StateId(0), ActionId(0)),
            (StateId(1), ActionId(0)),
            (StateId(2), ActionId(0)),
            (StateId(5), ActionId(0)),
        ];
        let plan = render_plan(&trajectory, &menu, &ctx, PlanProvenance::default()).unwrap();
        assert_eq!(plan.sentinel_count(), 2);
        let mut runner = DryRunner;
        let log =
            execute_plan(&plan, &mut runner, &DryHashClient, ExecuteOptions::default()).unwrap();
        assert_eq!(log.len(), plan.steps.len() - 2);
    }

    #[test]
    fn scripted_runner_durations_are_reported_verbatim() {
        struct ScriptedRunner;
        impl CommandRunner for ScriptedRunner {
            fn run(&mut self, command: &str) -> RunOutcome {
                RunOutcome {
                    status: 0,
                    seconds: 0.5 + command.len() as f64,
                    output: String::new(),
                }
            }
        }
        let mut menu = CommandMenu::default();
        menu.entries.insert(
            StateId(0),
            vec!["aa".to_string(), "bbbb".to_string()],
        );
        let trajectory = vec![(StateId(0), ActionId(0)), (StateId(0), ActionId(1))];
        let plan = render_plan(
            &trajectory,
            &menu,
            &CommandContext::default(),
            PlanProvenance::default(),
        )
        .unwrap();
        let mut runner = ScriptedRunner;
        let log =
            execute_plan(&plan, &mut runner, &DryHashClient, ExecuteOptions::default()).unwrap();
        assert_eq!(log[0].seconds, 2.5);
        assert_eq!(log[1].seconds, 4.5);
    }

    #[test]
    fn hash_submission_routes_to_the_client() {
        struct FlaggingClient;
        impl HashLookupClient for FlaggingClient {
            fn lookup(&self, submission: &str) -> HashLookup {
                HashLookup {
                    verdict: HashVerdict {
                        digest: submission.to_string(),
                        malicious: Some(true),
                        source: "scripted".to_string(),
                    },
                    seconds: 0.25,
                }
            }
        }
        let mut menu = CommandMenu::default();
        menu.entries
            .insert(StateId(55), vec!["vt-submit {outdir}/hashes.txt".to_string()]);
        let plan = render_plan(
            &[(StateId(55), ActionId(0))],
            &menu,
            &CommandContext::default(),
            PlanProvenance::default(),
        )
        .unwrap();
        let mut runner = DryRunner;
        let log =
            execute_plan(&plan, &mut runner, &FlaggingClient, ExecuteOptions::default()).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log[0].seconds, 0.25);
        assert!(log[0].output.contains("malicious"));
        assert!(log[0].output.contains("scripted"));
    }

    #[test]
    fn fail_fast_stops_on_nonzero_status() {
        struct FailingRunner;
        impl CommandRunner for FailingRunner {
            fn run(&mut self, _command: &str) -> RunOutcome {
                RunOutcome {
                    status: 7,
                    seconds: 0.0,
                    output: String::new(),
                }
            }
        }
        let mut menu = CommandMenu::default();
        menu.entries.insert(StateId(0), vec!["boom".to_string()]);
        let plan = render_plan(
            &[(StateId(0), ActionId(0)), (StateId(0), ActionId(0))],
            &menu,
            &CommandContext::default(),
            PlanProvenance::default(),
        )
        .unwrap();

        let mut runner = FailingRunner;
        let log = execute_plan(
            &plan,
            &mut runner,
            &DryHashClient,
            ExecuteOptions::default(),
        )
        .unwrap();
        assert_eq!(log.len(), 2);
        assert!(log.iter().all(|r| r.status == 7));

        let err = execute_plan(
            &plan,
            &mut runner,
            &DryHashClient,
            ExecuteOptions {
                fail_fast: true,
                ..ExecuteOptions::default()
            },
        )
        .unwrap_err();
        assert_eq!(err, CommandError::RunnerFailure { step: 0, status: 7 });
    }
}
