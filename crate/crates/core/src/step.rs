//! The component execution model.
//!
//! Every algorithmic piece — the whole solver, its initialization, one
//! iteration, a single search method — is a [`Step`]: a named component with
//! `start`, `run`, and `end` phases executed depth-first, one at a time.
//! `start` typically generates work (trial points into the queue), `run`
//! consumes it (dispatching evaluations), and `end` folds the results back
//! into the algorithm state. Components nest by calling [`run_step`] on their
//! children from inside their own phases, which also threads a dotted
//! component path (`Mads.Initialization`) through any error.

use std::error::Error;
use std::fmt;

/// One named phase-structured component over a state type `S`.
///
/// All three phases default to no-ops so trivial components only implement
/// what they use.
pub trait Step<S> {
    fn name(&self) -> &'static str;

    fn start(&mut self, _state: &mut S) -> Result<(), StepError> {
        Ok(())
    }

    fn run(&mut self, _state: &mut S) -> Result<(), StepError> {
        Ok(())
    }

    fn end(&mut self, _state: &mut S) -> Result<(), StepError> {
        Ok(())
    }
}

/// An error raised inside a component, tagged with the dotted path of the
/// component that raised it.
#[derive(Debug)]
pub struct StepError {
    path: String,
    source: Box<dyn Error + Send + Sync>,
}

impl StepError {
    pub fn new<E>(source: E) -> Self
    where
        E: Error + Send + Sync + 'static,
    {
        StepError {
            path: String::new(),
            source: Box::new(source),
        }
    }

    /// Where the error was raised, e.g. `Mads.Initialization`.
    pub fn path(&self) -> &str {
        &self.path
    }

    /// Stamps the component path on an error that does not have one yet; a
    /// path set deeper in the nesting is preserved.
    fn locate(mut self, path: &str) -> Self {
        if self.path.is_empty() {
            self.path = path.to_string();
        }
        self
    }

    /// Recovers the concrete error raised inside the component tree.
    pub fn downcast<E: Error + 'static>(&self) -> Option<&E> {
        self.source.downcast_ref::<E>()
    }
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.source)
        } else {
            write!(f, "in {}: {}", self.path, self.source)
        }
    }
}

impl Error for StepError {
    fn source(&self) -> Option<&(dyn Error + 'static)> {
        Some(self.source.as_ref())
    }
}

/// Executes one component depth-first: `start`, then `run`, then `end`.
///
/// `parent` is the caller's component path (empty at the root); errors from
/// any phase come back tagged with the full path of the failing component.
pub fn run_step<S>(
    step: &mut dyn Step<S>,
    parent: &str,
    state: &mut S,
) -> Result<(), StepError> {
    let path = if parent.is_empty() {
        step.name().to_string()
    } else {
        format!("{parent}.{}", step.name())
    };
    step.start(state).map_err(|e| e.locate(&path))?;
    step.run(state).map_err(|e| e.locate(&path))?;
    step.end(state).map_err(|e| e.locate(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, thiserror::Error)]
    #[error("boom")]
    struct Boom;

    /// Appends its phase markers to the shared trace, optionally running a
    /// nested child from its `run` phase.
    struct Tracer {
        name: &'static str,
        child: Option<Box<Tracer>>,
        fail_in_run: bool,
    }

    impl Step<Vec<String>> for Tracer {
        fn name(&self) -> &'static str {
            self.name
        }

        fn start(&mut self, trace: &mut Vec<String>) -> Result<(), StepError> {
            trace.push(format!("{}:start", self.name));
            Ok(())
        }

        fn run(&mut self, trace: &mut Vec<String>) -> Result<(), StepError> {
            trace.push(format!("{}:run", self.name));
            if self.fail_in_run {
                return Err(StepError::new(Boom));
            }
            if let Some(child) = self.child.as_mut() {
                run_step(child.as_mut(), self.name, trace)?;
            }
            Ok(())
        }

        fn end(&mut self, trace: &mut Vec<String>) -> Result<(), StepError> {
            trace.push(format!("{}:end", self.name));
            Ok(())
        }
    }

    #[test]
    fn phases_execute_depth_first_in_order() {
        let mut outer = Tracer {
            name: "Outer",
            fail_in_run: false,
            child: Some(Box::new(Tracer {
                name: "Inner",
                child: None,
                fail_in_run: false,
            })),
        };
        let mut trace = Vec::new();
        run_step(&mut outer, "", &mut trace).unwrap();
        assert_eq!(
            trace,
            [
                "Outer:start",
                "Outer:run",
                "Inner:start",
                "Inner:run",
                "Inner:end",
                "Outer:end"
            ]
        );
    }

    #[test]
    fn default_hooks_are_no_ops() {
        struct Bare;
        impl Step<()> for Bare {
            fn name(&self) -> &'static str {
                "Bare"
            }
        }
        run_step(&mut Bare, "", &mut ()).unwrap();
    }

    #[test]
    fn errors_carry_the_component_path() {
        let mut outer = Tracer {
            name: "Mads",
            fail_in_run: false,
            child: Some(Box::new(Tracer {
                name: "Initialization",
                child: None,
                fail_in_run: true,
            })),
        };
        let mut trace = Vec::new();
        let err = run_step(&mut outer, "", &mut trace).unwrap_err();
        assert_eq!(err.path(), "Mads.Initialization");
        assert_eq!(err.to_string(), "in Mads.Initialization: boom");
        assert!(err.downcast::<Boom>().is_some());
        // end of the failing component never ran
        assert!(!trace.contains(&"Initialization:end".to_string()));
    }
}
