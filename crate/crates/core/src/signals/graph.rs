use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::expr::Env;
use super::value::{SignalType, SignalValue};
use super::{SignalSpec, SourceSignalSpec};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("signal `{0}` is declared twice")]
    Duplicate(String),
    #[error("signal `{signal}` references undeclared signal `{reference}`")]
    UnknownSignal { signal: String, reference: String },
    #[error("signals form a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
}

/// A signal that failed to produce a value this tick. Only raised on the
/// tick the signal enters the faulted state.
#[derive(Clone, Debug, PartialEq)]
pub struct Fault {
    pub signal: String,
    pub message: String,
}

/// Dependency-ordered signal set of one morph.
#[derive(Clone, Debug)]
pub struct SignalGraph {
    specs: Vec<SignalSpec>,
    index: HashMap<String, usize>,
    deps: Vec<Vec<usize>>,
    order: Vec<usize>,
    types: Vec<SignalType>,
}

/// Last good value and fault flag of every signal, owned per instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalState {
    values: Vec<SignalValue>,
    faulted: Vec<bool>,
}

/// The coherent set of signal values of one tick.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignalSnapshot(Arc<BTreeMap<String, SignalValue>>);

impl SignalSnapshot {
    pub fn from_map(map: BTreeMap<String, SignalValue>) -> Self {
        SignalSnapshot(Arc::new(map))
    }

    pub fn get(&self, name: &str) -> Option<&SignalValue> {
        self.0.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SignalValue)> + '_ {
        self.0.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Env for SignalSnapshot {
    fn lookup(&self, name: &str) -> Option<SignalValue> {
        self.0.get(name).cloned()
    }
}

impl SignalGraph {
    pub fn build(specs: Vec<SignalSpec>) -> Result<SignalGraph, GraphError> {
        let mut index = HashMap::new();
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.name().to_string(), i).is_some() {
                return Err(GraphError::Duplicate(s.name().to_string()));
            }
        }
        let mut deps = Vec::with_capacity(specs.len());
        for s in &specs {
            let mut d = Vec::new();
            if let SignalSpec::Expression(e) = s {
                for var in e.expr.variables() {
                    let target = resolve(&index, var).ok_or_else(|| GraphError::UnknownSignal {
                        signal: e.name.clone(),
                        reference: var.to_string(),
                    })?;
                    if !d.contains(&target) {
                        d.push(target);
                    }
                }
            }
            deps.push(d);
        }
        let order = topological_order(&specs, &deps)?;
        let mut types = vec![SignalType::Unknown; specs.len()];
        for &i in &order {
            types[i] = match &specs[i] {
                SignalSpec::Source(s) => s.value.signal_type(),
                SignalSpec::Expression(e) => e.expr.infer(&|name| var_type(&index, &types, name)),
            };
        }
        Ok(SignalGraph {
            specs,
            index,
            deps,
            order,
            types,
        })
    }

    pub fn specs(&self) -> &[SignalSpec] {
        &self.specs
    }

    pub fn get(&self, name: &str) -> Option<&SignalSpec> {
        self.index.get(name).map(|&i| &self.specs[i])
    }

    /// Evaluation order: declaration order, except that every expression
    /// follows the signals it reads.
    pub fn order(&self) -> impl Iterator<Item = &SignalSpec> + '_ {
        self.order.iter().map(|&i| &self.specs[i])
    }

    /// Maps a variable name to the signal it reads, honouring `.x/.y/.z`
    /// component access on vec3 signals.
    pub fn resolve(&self, var: &str) -> Option<&str> {
        resolve(&self.index, var).map(|i| self.specs[i].name())
    }

    /// Static type of a variable reference.
    pub fn var_type(&self, var: &str) -> SignalType {
        var_type(&self.index, &self.types, var)
    }

    pub fn signal_type(&self, name: &str) -> SignalType {
        self.index.get(name).map_or(SignalType::Unknown, |&i| self.types[i])
    }

    /// Names of signals `name` reads directly.
    pub fn dependencies(&self, name: &str) -> Vec<&str> {
        self.index.get(name).map_or_else(Vec::new, |&i| {
            self.deps[i].iter().map(|&d| self.specs[d].name()).collect()
        })
    }

    pub fn initial_state(&self) -> SignalState {
        SignalState {
            values: self.types.iter().map(|t| SignalValue::default_for(*t)).collect(),
            faulted: vec![false; self.specs.len()],
        }
    }

    /// Samples every source once, then evaluates expressions in order.
    /// Failing signals keep their previous value.
    pub fn propagate<F>(&self, state: &mut SignalState, mut sample: F) -> (SignalSnapshot, Vec<Fault>)
    where
        F: FnMut(&SourceSignalSpec) -> Result<SignalValue, String>,
    {
        let mut faults = Vec::new();
        for &i in &self.order {
            let result = match &self.specs[i] {
                SignalSpec::Source(s) => sample(s),
                SignalSpec::Expression(e) => {
                    let env = |name: &str| self.index.get(name).map(|&j| state.values[j].clone());
                    e.expr.eval(&env).map_err(|err| err.to_string())
                }
            };
            match result {
                Ok(v) => {
                    state.values[i] = v;
                    state.faulted[i] = false;
                }
                Err(message) => {
                    if !state.faulted[i] {
                        faults.push(Fault {
                            signal: self.specs[i].name().to_string(),
                            message,
                        });
                    }
                    state.faulted[i] = true;
                }
            }
        }
        let map = self
            .specs
            .iter()
            .zip(&state.values)
            .map(|(s, v)| (s.name().to_string(), v.clone()))
            .collect();
        (SignalSnapshot::from_map(map), faults)
    }
}

impl SignalState {
    pub fn is_faulted(&self, graph: &SignalGraph, name: &str) -> bool {
        graph.index.get(name).is_some_and(|&i| self.faulted[i])
    }
}

fn resolve(index: &HashMap<String, usize>, var: &str) -> Option<usize> {
    if let Some(&i) = index.get(var) {
        return Some(i);
    }
    let (base, comp) = var.rsplit_once('.')?;
    matches!(comp, "x" | "y" | "z").then(|| index.get(base).copied()).flatten()
}

fn var_type(index: &HashMap<String, usize>, types: &[SignalType], var: &str) -> SignalType {
    match index.get(var) {
        Some(&i) => types[i],
        None => match resolve(index, var) {
            Some(_) => SignalType::Number,
            None => SignalType::Unknown,
        },
    }
}

fn topological_order(specs: &[SignalSpec], deps: &[Vec<usize>]) -> Result<Vec<usize>, GraphError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    fn visit(
        i: usize,
        specs: &[SignalSpec],
        deps: &[Vec<usize>],
        marks: &mut [Mark],
        stack: &mut Vec<usize>,
        out: &mut Vec<usize>,
    ) -> Result<(), GraphError> {
        match marks[i] {
            Mark::Done => return Ok(()),
            Mark::Open => {
                let start = stack.iter().position(|&s| s == i).unwrap_or(0);
                let mut cycle: Vec<String> =
                    stack[start..].iter().map(|&s| specs[s].name().to_string()).collect();
                cycle.push(specs[i].name().to_string());
                return Err(GraphError::Cycle(cycle));
            }
            Mark::New => {}
        }
        marks[i] = Mark::Open;
        stack.push(i);
        for &d in &deps[i] {
            visit(d, specs, deps, marks, stack, out)?;
        }
        stack.pop();
        marks[i] = Mark::Done;
        out.push(i);
        Ok(())
    }
    let mut marks = vec![Mark::New; specs.len()];
    let mut out = Vec::with_capacity(specs.len());
    for i in 0..specs.len() {
        visit(i, specs, deps, &mut marks, &mut Vec::new(), &mut out)?;
    }
    Ok(out)
}
