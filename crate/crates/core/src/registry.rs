//! Name-keyed registry of interchangeable strategies.

use std::collections::BTreeMap;
use std::sync::Arc;

/// Maps names to shared strategy objects (routing solvers, parameter
/// optimizers). Lookup is case-sensitive; names are listed in sorted order.
pub struct Registry<T: ?Sized> {
    entries: BTreeMap<String, Arc<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// Registers `item` under `name`, returning the entry it replaced.
    pub fn register(&mut self, name: impl Into<String>, item: Arc<T>) -> Option<Arc<T>> {
        self.entries.insert(name.into(), item)
    }

    pub fn get(&self, name: &str) -> Option<Arc<T>> {
        self.entries.get(name).cloned()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

impl<T: ?Sized> Default for Registry<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: ?Sized> Clone for Registry<T> {
    fn clone(&self) -> Self {
        Self {
            entries: self.entries.clone(),
        }
    }
}

impl<T: ?Sized> std::fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Send + Sync {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    #[test]
    fn register_and_lookup() {
        let mut reg: Registry<dyn Greeter> = Registry::new();
        assert!(reg.register("hello", Arc::new(Hello)).is_none());
        assert_eq!(reg.get("hello").unwrap().greet(), "hello");
        assert!(reg.get("bye").is_none());
        assert_eq!(reg.names().collect::<Vec<_>>(), ["hello"]);
    }
}
