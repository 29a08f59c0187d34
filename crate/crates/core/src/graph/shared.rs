use std::sync::Arc;
use std::time::Duration;

use parking_lot::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use super::{GraphError, GraphStore};

const DEFAULT_LOCK_TIMEOUT: Duration = Duration::from_secs(5);

/// Shared handle to a [`GraphStore`]: many readers or one writer.
///
/// Writers commit one article (node plus all its edges) per write guard,
/// so readers never see a half-linked article. Lock acquisition gives up
/// after a deadline and reports [`GraphError::StoreUnavailable`].
#[derive(Clone)]
pub struct SharedGraph {
    inner: Arc<RwLock<GraphStore>>,
    timeout: Duration,
}

impl Default for SharedGraph {
    fn default() -> Self {
        Self::new(GraphStore::new())
    }
}

impl SharedGraph {
    pub fn new(store: GraphStore) -> Self {
        Self { inner: Arc::new(RwLock::new(store)), timeout: DEFAULT_LOCK_TIMEOUT }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn read(&self) -> Result<RwLockReadGuard<'_, GraphStore>, GraphError> {
        self.inner.try_read_for(self.timeout).ok_or(GraphError::StoreUnavailable)
    }

    pub fn write(&self) -> Result<RwLockWriteGuard<'_, GraphStore>, GraphError> {
        self.inner.try_write_for(self.timeout).ok_or(GraphError::StoreUnavailable)
    }

    /// Swaps in a whole new store, e.g. after loading a snapshot.
    pub fn replace(&self, store: GraphStore) -> Result<GraphStore, GraphError> {
        Ok(std::mem::replace(&mut *self.write()?, store))
    }
}
