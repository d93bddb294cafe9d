//! Name-keyed registries of interchangeable strategies.
//!
//! A strategy is selected at runtime by a spec string `name` or
//! `name:argument`, e.g. `isotropic` or `mf:-1`.

use std::sync::Arc;

use crate::error::{Error, Result};

type Constructor<T> = fn(Option<&str>) -> Result<Arc<T>>;

struct Entry<T: ?Sized> {
    name: &'static str,
    summary: &'static str,
    build: Constructor<T>,
}

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    pub fn register(
        mut self,
        name: &'static str,
        summary: &'static str,
        build: Constructor<T>,
    ) -> Self {
        assert!(
            self.entries.iter().all(|e| e.name != name),
            "duplicate {} `{name}`",
            self.kind
        );
        self.entries.push(Entry {
            name,
            summary,
            build,
        });
        self
    }

    pub fn kind(&self) -> &'static str {
        self.kind
    }

    /// Registered names, in registration order.
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }

    pub fn create(&self, spec: &str) -> Result<Arc<T>> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let entry = self
            .entries
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })?;
        (entry.build)(arg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter: Send + Sync {
        fn greet(&self) -> String;
    }

    struct Plain;
    impl Greeter for Plain {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    struct Named(String);
    impl Greeter for Named {
        fn greet(&self) -> String {
            format!("hi {}", self.0)
        }
    }

    fn registry() -> Registry<dyn Greeter> {
        Registry::<dyn Greeter>::new("greeter")
            .register("plain", "no argument", |_| Ok(Arc::new(Plain)))
            .register("named", "needs a name", |arg| {
                let name = arg.ok_or_else(|| Error::InvalidParameter("name required".into()))?;
                Ok(Arc::new(Named(name.to_string())))
            })
    }

    #[test]
    fn lookup_by_name_and_argument() {
        let r = registry();
        assert_eq!(r.create("plain").unwrap().greet(), "hi");
        assert_eq!(r.create("Named: bob").unwrap().greet(), "hi bob");
        assert!(r.create("named").is_err());
        let err = r.create("loud").err().unwrap().to_string();
        assert!(err.contains("plain, named"), "{err}");
    }
}
