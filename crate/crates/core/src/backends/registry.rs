use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, Naive, PoolConfig, TileConfig, TiledParallel, TiledPool, TiledSeq};
use crate::matrix::Matrix;

/// Names of the backends installed by [`Registry::with_builtins`].
pub const BUILTIN_NAMES: [&str; 4] = ["naive", "tiled-seq", "tiled-parallel", "tiled-pool"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub name: String,
    pub parallel: bool,
    pub requires_external: bool,
}

impl BackendDescriptor {
    pub fn builtin(name: &str, parallel: bool) -> Self {
        Self {
            name: name.to_owned(),
            parallel,
            requires_external: false,
        }
    }

    pub fn external(name: &str, parallel: bool) -> Self {
        Self {
            name: name.to_owned(),
            parallel,
            requires_external: true,
        }
    }
}

/// Returned by registration; names the backend within its registry.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BackendHandle(String);

impl BackendHandle {
    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BackendHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

struct Entry {
    descriptor: BackendDescriptor,
    backend: Arc<dyn Backend>,
}

/// Backends looked up by [`Registry::resolve`], paired with their names.
pub type Resolved = Vec<(String, Arc<dyn Backend>)>;

/// Name-keyed set of backends in registration order.
#[derive(Default)]
pub struct Registry {
    entries: Vec<Entry>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the four host backends configured with `tile` and `pool`.
    pub fn with_builtins(tile: TileConfig, pool: PoolConfig) -> Self {
        let mut reg = Self::new();
        let builtins: [(BackendDescriptor, Arc<dyn Backend>); 4] = [
            (BackendDescriptor::builtin("naive", false), Arc::new(Naive)),
            (BackendDescriptor::builtin("tiled-seq", false), Arc::new(TiledSeq { tile })),
            (
                BackendDescriptor::builtin("tiled-parallel", true),
                Arc::new(TiledParallel { tile, pool }),
            ),
            (
                BackendDescriptor::builtin("tiled-pool", true),
                Arc::new(TiledPool { tile, pool }),
            ),
        ];
        for (descriptor, backend) in builtins {
            reg.insert(descriptor, backend).expect("builtin names are unique");
        }
        reg
    }

    fn insert(
        &mut self,
        descriptor: BackendDescriptor,
        backend: Arc<dyn Backend>,
    ) -> Result<BackendHandle, BackendError> {
        if descriptor.name.is_empty() {
            return Err(BackendError::InvalidConfig("backend name is empty".into()));
        }
        if self.contains(&descriptor.name) {
            return Err(BackendError::Conflict(descriptor.name));
        }
        let handle = BackendHandle(descriptor.name.clone());
        self.entries.push(Entry { descriptor, backend });
        Ok(handle)
    }

    pub fn register<B: Backend + 'static>(
        &mut self,
        descriptor: BackendDescriptor,
        backend: B,
    ) -> Result<BackendHandle, BackendError> {
        self.insert(descriptor, Arc::new(backend))
    }

    /// Registers a plain multiplication function, e.g. a wrapper around a
    /// vendor BLAS. Its errors surface as trial failures in the harness.
    pub fn register_external<F>(
        &mut self,
        descriptor: BackendDescriptor,
        f: F,
    ) -> Result<BackendHandle, BackendError>
    where
        F: Fn(&Matrix, &Matrix) -> Result<Matrix, BackendError> + Send + Sync + 'static,
    {
        self.insert(descriptor, Arc::new(f))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|e| e.descriptor.name == name)
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Backend>> {
        self.entries
            .iter()
            .find(|e| e.descriptor.name == name)
            .map(|e| Arc::clone(&e.backend))
    }

    pub fn descriptor(&self, name: &str) -> Option<&BackendDescriptor> {
        self.entries
            .iter()
            .map(|e| &e.descriptor)
            .find(|d| d.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.descriptor.name.as_str())
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &BackendDescriptor> {
        self.entries.iter().map(|e| &e.descriptor)
    }

    /// Looks up every name, failing on the first unknown one.
    pub fn resolve(&self, names: &[String]) -> Result<Resolved, BackendError> {
        names
            .iter()
            .map(|n| {
                self.get(n)
                    .map(|b| (n.clone(), b))
                    .ok_or_else(|| BackendError::Unknown(n.clone()))
            })
            .collect()
    }
}
