//! Line-oriented scenario files.
//!
//! ```text
//! # comment
//! [graph]
//! agents = 3
//! edge = 2 1        # agent 2 senses agent 1
//! edge = 3 2
//!
//! [desired]
//! kind = rotating   # or `static`
//! axis = 0 0 1
//! period = 2.5
//! p1 = 0 0 0
//! ...
//! ```
//!
//! Sections `graph`, `desired`, `gains`, `initial`, `sim` and `pe` are
//! required, `observer` is optional. Vectors are whitespace- or
//! comma-separated numbers. Unknown sections and keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::controller::{require_admissible, Gains};
use crate::error::{Error, Result};
use crate::geometry::{Mat3, UnitVec3, Vec3};
use crate::graph::{build_digraph, validate_leader_follower, AgentId, Digraph};
use crate::observer::{ObserverConfig, ObserverGain, ObserverTruth};
use crate::sim::{AgentState, Scenario, DEFAULT_SEPARATION_GUARD};
use crate::trajectory::{rotating_rigid_trajectory, DesiredTrajectory};

const REQUIRED: [&str; 6] = ["graph", "desired", "gains", "initial", "sim", "pe"];
const OPTIONAL: [&str; 1] = ["observer"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeSettings {
    pub window: f64,
    pub mu: f64,
    pub horizon: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSettings {
    pub gain: ObserverGain,
    /// Initial estimates; agents without an entry start at the origin.
    pub p_hat0: Vec<Vec3>,
    pub duration: f64,
    pub truth: ObserverTruth,
}

impl ObserverSettings {
    pub fn config(&self) -> ObserverConfig {
        ObserverConfig { gain: self.gain, p_hat0: self.p_hat0.clone(), duration: self.duration, truth: self.truth }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub pe: PeSettings,
    pub observer: Option<ObserverSettings>,
}

impl ScenarioFile {
    /// Observer settings from the file, or `K = I`, zero initial estimates and
    /// the simulation horizon.
    pub fn observer_or_default(&self) -> ObserverSettings {
        self.observer.clone().unwrap_or_else(|| ObserverSettings {
            gain: ObserverGain::identity(),
            p_hat0: vec![Vec3::zeros(); self.scenario.agent_count()],
            duration: self.scenario.t_end,
            truth: ObserverTruth::Desired,
        })
    }
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

#[derive(Debug)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug)]
struct Section {
    line: usize,
    entries: Vec<Entry>,
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| perr(line, format!("malformed section header `{content}`")))?
                .trim()
                .to_string();
            if !REQUIRED.contains(&name.as_str()) && !OPTIONAL.contains(&name.as_str()) {
                return Err(perr(line, format!("unknown section [{name}]")));
            }
            if sections.contains_key(&name) {
                return Err(perr(line, format!("section [{name}] appears twice")));
            }
            sections.insert(name.clone(), Section { line, entries: Vec::new() });
            current = Some(name);
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected `key = value`, got `{content}`")))?;
        let name = current.as_ref().ok_or_else(|| perr(line, "key outside of any section"))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(perr(line, "empty key"));
        }
        sections.get_mut(name).expect("current section exists").entries.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    let missing: Vec<String> = REQUIRED.iter().filter(|s| !sections.contains_key(**s)).map(|s| s.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingSections(missing));
    }
    Ok(sections)
}

/// Key shapes accepted in a section.
enum KeyShape {
    Plain(&'static str),
    /// `prefix<agent>`, e.g. `p3` or `kp_2`.
    Indexed(&'static str),
}

struct Reader<'a> {
    name: &'static str,
    sec: &'a Section,
    n: usize,
}

impl<'a> Reader<'a> {
    fn new(name: &'static str, sec: &'a Section, n: usize, shapes: &[KeyShape]) -> Result<Self> {
        let reader = Reader { name, sec, n };
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for e in &sec.entries {
            let known = shapes.iter().any(|s| match s {
                KeyShape::Plain(k) => e.key == *k,
                KeyShape::Indexed(p) => {
                    e.key.strip_prefix(p).is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
                }
            });
            if !known {
                return Err(perr(e.line, format!("unknown key `{}` in [{name}]", e.key)));
            }
            if e.key != "edge" {
                if let Some(first) = seen.insert(&e.key, e.line) {
                    return Err(perr(e.line, format!("duplicate key `{}` (first set on line {first})", e.key)));
                }
            }
        }
        Ok(reader)
    }

    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.sec.entries.iter().find(|e| e.key == key)
    }

    fn require(&self, key: &str) -> Result<&'a Entry> {
        self.get(key).ok_or_else(|| perr(self.sec.line, format!("[{}] is missing key `{key}`", self.name)))
    }

    fn all<'k>(&self, key: &'k str) -> impl Iterator<Item = &'a Entry> + 'k
    where
        'a: 'k,
    {
        self.sec.entries.iter().filter(move |e| e.key == key)
    }

    /// Entries `prefix<i>` keyed by agent, with range checks.
    fn indexed(&self, prefix: &str) -> Result<BTreeMap<AgentId, &'a Entry>> {
        let mut out = BTreeMap::new();
        for e in &self.sec.entries {
            let Some(rest) = e.key.strip_prefix(prefix) else { continue };
            let Ok(k) = rest.parse::<usize>() else { continue };
            match AgentId::new(k).filter(|a| a.get() <= self.n) {
                Some(a) => {
                    out.insert(a, e);
                }
                None => return Err(perr(e.line, format!("`{}` refers to agent {k}, but agents are 1..={}", e.key, self.n))),
            }
        }
        Ok(out)
    }

    /// One `prefix<i>` vector per agent.
    fn per_agent_vectors(&self, prefix: &str) -> Result<Vec<Vec3>> {
        let map = self.indexed(prefix)?;
        let mut out = Vec::with_capacity(self.n);
        for k in 1..=self.n {
            let a = AgentId::new(k).expect("k >= 1");
            let e = map.get(&a).ok_or_else(|| perr(self.sec.line, format!("[{}] is missing key `{prefix}{k}`", self.name)))?;
            out.push(vec3(e)?);
        }
        Ok(out)
    }
}

fn numbers(e: &Entry) -> Result<Vec<f64>> {
    e.value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|tok| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| perr(e.line, format!("`{}`: `{tok}` is not a finite number", e.key)))
        })
        .collect()
}

fn scalar(e: &Entry) -> Result<f64> {
    match numbers(e)?.as_slice() {
        [v] => Ok(*v),
        other => Err(perr(e.line, format!("`{}` expects one number, got {}", e.key, other.len()))),
    }
}

fn positive(e: &Entry) -> Result<f64> {
    let v = scalar(e)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(perr(e.line, format!("`{}` must be positive, got {v}", e.key)))
    }
}

fn vec3(e: &Entry) -> Result<Vec3> {
    match numbers(e)?.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        other => Err(perr(e.line, format!("`{}` expects 3 numbers, got {}", e.key, other.len()))),
    }
}

fn parse_graph(sec: &Section) -> Result<Digraph> {
    let r = Reader::new("graph", sec, 0, &[KeyShape::Plain("agents"), KeyShape::Plain("edge")])?;
    let agents_entry = r.require("agents")?;
    let n = agents_entry
        .value
        .parse::<usize>()
        .map_err(|_| perr(agents_entry.line, format!("`agents` expects a positive integer, got `{}`", agents_entry.value)))?;
    if n < 2 {
        return Err(perr(agents_entry.line, Error::TooFewAgents(n).to_string()));
    }
    let mut edges = Vec::new();
    let mut lines: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for e in r.all("edge") {
        let ends: Vec<usize> = e
            .value
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| perr(e.line, format!("`edge` expects two agent numbers, got `{}`", e.value)))?;
        let [i, j] = ends[..] else {
            return Err(perr(e.line, format!("`edge` expects two agent numbers, got `{}`", e.value)));
        };
        if let Some(first) = lines.insert((i, j), e.line) {
            return Err(perr(e.line, format!("duplicate edge ({i}, {j}) (first on line {first})")));
        }
        if let Err(err) = build_digraph(n, &[(i, j)]) {
            return Err(perr(e.line, err.to_string()));
        }
        edges.push((i, j));
    }
    let graph = build_digraph(n, &edges).map_err(|err| perr(sec.line, err.to_string()))?;
    let report = validate_leader_follower(&graph);
    if !report.is_leader_follower {
        let why = report.failure_witness.map(|w| w.to_string()).unwrap_or_default();
        return Err(perr(sec.line, Error::NotLeaderFollower(why).to_string()));
    }
    Ok(graph)
}

fn parse_desired(sec: &Section, n: usize) -> Result<DesiredTrajectory> {
    let r = Reader::new(
        "desired",
        sec,
        n,
        &[
            KeyShape::Plain("kind"),
            KeyShape::Plain("axis"),
            KeyShape::Plain("period"),
            KeyShape::Plain("scale"),
            KeyShape::Plain("rotation"),
            KeyShape::Plain("translation"),
            KeyShape::Indexed("p"),
        ],
    )?;
    let kind = r.require("kind")?;
    let positions = r.per_agent_vectors("p")?;
    let base = match kind.value.as_str() {
        "rotating" => {
            let axis_e = r.require("axis")?;
            let raw = vec3(axis_e)?;
            let axis = UnitVec3::new(raw)
                .ok()
                .or_else(|| UnitVec3::normalize(raw))
                .ok_or_else(|| perr(axis_e.line, "`axis` must be a nonzero vector"))?;
            let period = positive(r.require("period")?)?;
            rotating_rigid_trajectory(positions, axis, period)?
        }
        "static" => {
            for key in ["axis", "period"] {
                if let Some(e) = r.get(key) {
                    return Err(perr(e.line, format!("`{key}` only applies to kind = rotating")));
                }
            }
            DesiredTrajectory::Static { positions }
        }
        other => return Err(perr(kind.line, format!("unknown desired kind `{other}` (expected rotating or static)"))),
    };
    let (scale, rotation, translation) = (r.get("scale"), r.get("rotation"), r.get("translation"));
    if scale.is_none() && rotation.is_none() && translation.is_none() {
        return Ok(base);
    }
    let s = scale.map(positive).transpose()?.unwrap_or(1.0);
    let rot = match rotation {
        Some(e) => match numbers(e)?.as_slice() {
            v if v.len() == 9 => Mat3::from_row_slice(v),
            other => return Err(perr(e.line, format!("`rotation` expects 9 numbers (row-major), got {}", other.len()))),
        },
        None => Mat3::identity(),
    };
    let tr = translation.map(vec3).transpose()?.unwrap_or_else(Vec3::zeros);
    let line = rotation.or(scale).or(translation).map_or(sec.line, |e| e.line);
    base.with_similarity(rot, s, tr).map_err(|e| perr(line, e.to_string()))
}

fn parse_gains(sec: &Section, graph: &Digraph) -> Result<Vec<Gains>> {
    let n = graph.agent_count();
    let r = Reader::new(
        "gains",
        sec,
        n,
        &[KeyShape::Plain("kp"), KeyShape::Plain("kd"), KeyShape::Indexed("kp_"), KeyShape::Indexed("kd_")],
    )?;
    let kp_over = r.indexed("kp_")?;
    let kd_over = r.indexed("kd_")?;
    let (kp, kd) = (r.get("kp"), r.get("kd"));
    let mut gains = Vec::with_capacity(n);
    for a in graph.agents() {
        let pick = |over: &BTreeMap<AgentId, &'_ Entry>, global: Option<&'_ Entry>, name: &str| -> Result<(f64, usize)> {
            let e = over
                .get(&a)
                .copied()
                .or(global)
                .ok_or_else(|| perr(sec.line, format!("[gains] has no `{name}` for agent {a} (set `{name}` or `{name}_{a}`)")))?;
            Ok((positive(e)?, e.line))
        };
        let (p, p_line) = pick(&kp_over, kp, "kp")?;
        let (d, d_line) = pick(&kd_over, kd, "kd")?;
        let g = Gains::new(p, d);
        let m = graph.neighbor_count(a);
        if m > 0 {
            if let Err(e) = require_admissible(m, g) {
                let line = if d <= 1.0 / m as f64 { d_line } else { p_line };
                return Err(perr(line, format!("{e} (agent {a})")));
            }
        }
        gains.push(g);
    }
    Ok(gains)
}

fn parse_initial(sec: &Section, n: usize) -> Result<Vec<AgentState>> {
    let r = Reader::new("initial", sec, n, &[KeyShape::Indexed("p"), KeyShape::Indexed("v")])?;
    let p = r.per_agent_vectors("p")?;
    let v = r.per_agent_vectors("v")?;
    Ok(p.into_iter().zip(v).map(|(p, v)| AgentState::new(p, v)).collect())
}

fn parse_sim(sec: &Section) -> Result<(f64, f64, f64)> {
    let r = Reader::new(
        "sim",
        sec,
        0,
        &[KeyShape::Plain("dt"), KeyShape::Plain("t_end"), KeyShape::Plain("separation_guard")],
    )?;
    let dt = positive(r.require("dt")?)?;
    let t_end = positive(r.require("t_end")?)?;
    let guard = r.get("separation_guard").map(positive).transpose()?.unwrap_or(DEFAULT_SEPARATION_GUARD);
    Ok((dt, t_end, guard))
}

fn parse_pe(sec: &Section) -> Result<PeSettings> {
    let r = Reader::new(
        "pe",
        sec,
        0,
        &[KeyShape::Plain("window"), KeyShape::Plain("mu"), KeyShape::Plain("horizon"), KeyShape::Plain("dt")],
    )?;
    let window = positive(r.require("window")?)?;
    let mu_e = r.require("mu")?;
    let mu = positive(mu_e)?;
    let horizon = r.get("horizon").map(positive).transpose()?.unwrap_or(2.0 * window);
    let dt = r.get("dt").map(positive).transpose()?.unwrap_or(crate::pe::DEFAULT_PE_DT);
    if horizon < window {
        return Err(perr(r.get("horizon").map_or(sec.line, |e| e.line), format!("horizon {horizon} is shorter than window {window}")));
    }
    Ok(PeSettings { window, mu, horizon, dt })
}

fn parse_observer(sec: &Section, n: usize, default_duration: f64) -> Result<ObserverSettings> {
    let r = Reader::new(
        "observer",
        sec,
        n,
        &[KeyShape::Plain("gain"), KeyShape::Plain("duration"), KeyShape::Plain("truth"), KeyShape::Indexed("p_hat")],
    )?;
    let gain = match r.get("gain") {
        None => ObserverGain::identity(),
        Some(e) => {
            let k = match numbers(e)?.as_slice() {
                [s] => Mat3::identity() * *s,
                v if v.len() == 9 => Mat3::from_row_slice(v),
                other => return Err(perr(e.line, format!("`gain` expects 1 or 9 numbers, got {}", other.len()))),
            };
            ObserverGain::new(k).map_err(|err| perr(e.line, err.to_string()))?
        }
    };
    let duration = r.get("duration").map(positive).transpose()?.unwrap_or(default_duration);
    let truth = match r.get("truth") {
        None => ObserverTruth::Desired,
        Some(e) => match e.value.as_str() {
            "desired" => ObserverTruth::Desired,
            "closed_loop" => ObserverTruth::ClosedLoop,
            other => return Err(perr(e.line, format!("unknown observer truth `{other}` (expected desired or closed_loop)"))),
        },
    };
    let mut p_hat0 = vec![Vec3::zeros(); n];
    for (a, e) in r.indexed("p_hat")? {
        p_hat0[a.index()] = vec3(e)?;
    }
    Ok(ObserverSettings { gain, p_hat0, duration, truth })
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioFile> {
    let sections = split_sections(text)?;
    let graph = parse_graph(&sections["graph"])?;
    let n = graph.agent_count();
    let desired = parse_desired(&sections["desired"], n)?;
    let gains = parse_gains(&sections["gains"], &graph)?;
    let initial = parse_initial(&sections["initial"], n)?;
    let (dt, t_end, guard) = parse_sim(&sections["sim"])?;
    let pe = parse_pe(&sections["pe"])?;
    let observer = sections.get("observer").map(|s| parse_observer(s, n, t_end)).transpose()?;
    let initial_line = sections["initial"].line;
    let scenario = Scenario::new(graph, desired, gains, initial, dt, t_end, guard).map_err(|e| match e {
        Error::BearingUndefined { .. } => perr(initial_line, e.to_string()),
        other => other,
    })?;
    Ok(ScenarioFile { scenario, pe, observer })
}

fn fmt_vec(v: &Vec3) -> String {
    format!("{:?} {:?} {:?}", v.x, v.y, v.z)
}

/// Serializes a scenario so that parsing the output reproduces it exactly.
/// Sampled desired trajectories have no file representation.
pub fn write_scenario(file: &ScenarioFile) -> Result<String> {
    let scn = &file.scenario;
    let n = scn.agent_count();
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "[graph]").ok();
    writeln!(w, "agents = {n}").ok();
    for (i, j) in scn.graph.sorted_edges() {
        writeln!(w, "edge = {i} {j}").ok();
    }

    writeln!(w, "\n[desired]").ok();
    let (base, similarity) = match &scn.desired {
        DesiredTrajectory::Similarity { inner, rotation, scale, translation } => (inner.as_ref(), Some((rotation, scale, translation))),
        other => (other, None),
    };
    match base {
        DesiredTrajectory::RotatingRigid { initial, axis, period } => {
            writeln!(w, "kind = rotating").ok();
            writeln!(w, "axis = {}", fmt_vec(axis)).ok();
            writeln!(w, "period = {period:?}").ok();
            for (k, p) in initial.iter().enumerate() {
                writeln!(w, "p{} = {}", k + 1, fmt_vec(p)).ok();
            }
        }
        DesiredTrajectory::Static { positions } => {
            writeln!(w, "kind = static").ok();
            for (k, p) in positions.iter().enumerate() {
                writeln!(w, "p{} = {}", k + 1, fmt_vec(p)).ok();
            }
        }
        _ => return Err(Error::invalid("only rotating and static desired trajectories can be written to a scenario file")),
    }
    if let Some((rot, scale, tr)) = similarity {
        let r: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| format!("{:?}", rot[(i, j)]))).collect();
        writeln!(w, "rotation = {}", r.join(" ")).ok();
        writeln!(w, "scale = {scale:?}").ok();
        writeln!(w, "translation = {}", fmt_vec(tr)).ok();
    }

    writeln!(w, "\n[gains]").ok();
    let global = scn.gains[scn.leader().index()];
    writeln!(w, "kp = {:?}", global.kp).ok();
    writeln!(w, "kd = {:?}", global.kd).ok();
    for (k, g) in scn.gains.iter().enumerate() {
        if g.kp != global.kp {
            writeln!(w, "kp_{} = {:?}", k + 1, g.kp).ok();
        }
        if g.kd != global.kd {
            writeln!(w, "kd_{} = {:?}", k + 1, g.kd).ok();
        }
    }

    writeln!(w, "\n[initial]").ok();
    for (k, s) in scn.initial.iter().enumerate() {
        writeln!(w, "p{} = {}", k + 1, fmt_vec(&s.p)).ok();
        writeln!(w, "v{} = {}", k + 1, fmt_vec(&s.v)).ok();
    }

    writeln!(w, "\n[sim]").ok();
    writeln!(w, "dt = {:?}", scn.dt).ok();
    writeln!(w, "t_end = {:?}", scn.t_end).ok();
    writeln!(w, "separation_guard = {:?}", scn.separation_guard).ok();

    writeln!(w, "\n[pe]").ok();
    writeln!(w, "window = {:?}", file.pe.window).ok();
    writeln!(w, "mu = {:?}", file.pe.mu).ok();
    writeln!(w, "horizon = {:?}", file.pe.horizon).ok();
    writeln!(w, "dt = {:?}", file.pe.dt).ok();

    if let Some(obs) = &file.observer {
        writeln!(w, "\n[observer]").ok();
        let k = obs.gain.matrix();
        let g: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| format!("{:?}", k[(i, j)]))).collect();
        writeln!(w, "gain = {}", g.join(" ")).ok();
        writeln!(w, "duration = {:?}", obs.duration).ok();
        let truth = match obs.truth {
            ObserverTruth::Desired => "desired",
            ObserverTruth::ClosedLoop => "closed_loop",
        };
        writeln!(w, "truth = {truth}").ok();
        for (k, p) in obs.p_hat0.iter().enumerate() {
            writeln!(w, "p_hat{} = {}", k + 1, fmt_vec(p)).ok();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn pyramid_file() -> ScenarioFile {
        let t = 2.0 * std::f64::consts::PI * presets::PYRAMID_PERIOD;
        ScenarioFile { scenario: presets::pyramid(), pe: PeSettings { window: t, mu: 0.2, horizon: 2.0 * t, dt: 1e-2 }, observer: None }
    }

    fn err_of(text: &str) -> String {
        parse_scenario_str(text).unwrap_err().to_string()
    }

    #[test]
    fn round_trip_is_exact() {
        let file = pyramid_file();
        let text = write_scenario(&file).unwrap();
        assert_eq!(parse_scenario_str(&text).unwrap(), file);
    }

    #[test]
    fn empty_file_lists_every_section() {
        assert_eq!(err_of(""), "missing sections: graph, desired, gains, initial, sim, pe");
        assert_eq!(err_of("# only a comment\n[graph]\nagents = 2\n"), "missing sections: desired, gains, initial, sim, pe");
    }

    #[test]
    fn inadmissible_gain_names_the_bound() {
        let text = write_scenario(&pyramid_file()).unwrap().replace("kp = 3.0", "kp = 4");
        let msg = err_of(&text);
        assert!(msg.contains("gain bound violated: 4 ≥ 3.96"), "{msg}");
        assert!(msg.starts_with("line "), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let text = write_scenario(&pyramid_file()).unwrap();
        let sim_line = text.lines().position(|l| l == "[sim]").unwrap() + 1;
        let text = text.replace("[sim]\n", "[sim]\nstep = 0.1\n");
        assert_eq!(err_of(&text), format!("line {}: unknown key `step` in [sim]", sim_line + 1));
    }

    #[test]
    fn structural_errors() {
        let base = write_scenario(&pyramid_file()).unwrap();
        assert!(err_of(&base.replace("edge = 4 3", "edge = 4 4")).contains("self-loop"));
        assert!(err_of(&base.replace("edge = 4 3", "edge = 4 9")).contains("outside"));
        assert!(err_of(&base.replace("edge = 4 3", "edge = 3 2")).contains("duplicate edge"));
        assert!(err_of(&base.replace("edge = 4 3", "edge = 4 3\nedge = 1 4")).contains("not a leader-follower"));
        assert!(err_of(&base.replace("p4 = -0.5 -0.5 1.0\n", "")).contains("missing key `p4`"));
        assert!(err_of(&base.replacen("v4 = ", "p7 = 0 0 0\nv4 = ", 1)).contains("agent 7"));
        assert!(err_of(&base.replace("[pe]", "[pe]\n[nope]")).contains("unknown section [nope]"));
        assert!(err_of(&base.replace("dt = 0.001", "dt = fast")).contains("not a finite number"));
        assert!(err_of(&base.replace("kind = rotating", "kind = spinning")).contains("unknown desired kind"));
        assert!(err_of("agents = 3\n").contains("line 1: key outside of any section"));
    }

    #[test]
    fn observer_section_and_similarity_round_trip() {
        let mut file = pyramid_file();
        file.observer = Some(ObserverSettings {
            gain: ObserverGain::new(Mat3::new(2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 3.0)).unwrap(),
            p_hat0: vec![Vec3::zeros(), Vec3::new(1.0, 2.0, 3.0), Vec3::new(-1.0, 0.0, 0.5), Vec3::new(0.1, 0.2, 0.3)],
            duration: 40.0,
            truth: ObserverTruth::ClosedLoop,
        });
        let s = &mut file.scenario;
        let rot = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        s.desired = s.desired.clone().with_similarity(rot, 2.0, Vec3::new(1.0, 0.0, -1.0)).unwrap();
        s.gains[3] = Gains::new(2.5, 12.0);
        let text = write_scenario(&file).unwrap();
        assert_eq!(parse_scenario_str(&text).unwrap(), file);
    }
}
