//! On-disk response cache. One JSON document per response, named by the
//! SHA-256 of the cache key.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    DrivingRoute, ProviderError, ProviderKind, RideEstimate, RouteProvider, TransitItinerary,
};
use crate::geo::GeoPoint;
use crate::router::RouteStep;

/// Identifies one provider response.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn new(
        operation: &str,
        kind: ProviderKind,
        origin: GeoPoint,
        destination: GeoPoint,
    ) -> Self {
        Self(format!(
            "{operation}|{}|{:.5},{:.5}|{:.5},{:.5}",
            kind.as_str(),
            origin.lat(),
            origin.lon(),
            destination.lat(),
            destination.lon()
        ))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn file_name(&self) -> String {
        format!("{}.json", hex::encode(Sha256::digest(self.0.as_bytes())))
    }
}

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    key: String,
    response: T,
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    counter: AtomicU64,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(key.file_name())
    }

    /// A stored response, if one exists for `key` and parses.
    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let bytes = fs::read(self.path_for(key)).ok()?;
        let entry: Entry<T> = serde_json::from_slice(&bytes).ok()?;
        (entry.key == key.0).then_some(entry.response)
    }

    /// Store a response. The file appears atomically, so concurrent readers
    /// see either the previous document or the new one.
    pub fn put<T: Serialize>(&self, key: &CacheKey, response: &T) -> io::Result<()> {
        let entry = Entry {
            key: key.0.clone(),
            response,
        };
        let bytes = serde_json::to_vec_pretty(&entry).map_err(io::Error::other)?;
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(
            ".{}.{}.{n}.tmp",
            key.file_name(),
            std::process::id()
        ));
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, self.path_for(key))
    }
}

/// Wraps a provider so every successful response is read from and written
/// to a [`ResponseCache`]. Errors are never cached.
pub struct CachedProvider<P> {
    inner: P,
    cache: ResponseCache,
}

impl<P: RouteProvider> CachedProvider<P> {
    pub fn new(inner: P, cache: ResponseCache) -> Self {
        Self { inner, cache }
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    fn cached<T: Serialize + DeserializeOwned>(
        &self,
        operation: &str,
        origin: GeoPoint,
        destination: GeoPoint,
        fetch: impl FnOnce() -> Result<T, ProviderError>,
    ) -> Result<T, ProviderError> {
        let key = CacheKey::new(operation, self.inner.kind(), origin, destination);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let response = fetch()?;
        // A failed write only costs a future cache miss.
        let _ = self.cache.put(&key, &response);
        Ok(response)
    }
}

impl<P: RouteProvider> RouteProvider for CachedProvider<P> {
    fn kind(&self) -> ProviderKind {
        self.inner.kind()
    }

    fn driving_way(&self, o: GeoPoint, d: GeoPoint) -> Result<DrivingRoute, ProviderError> {
        self.cached("driving", o, d, || self.inner.driving_way(o, d))
    }

    fn transit_route(&self, o: GeoPoint, d: GeoPoint) -> Result<TransitItinerary, ProviderError> {
        self.cached("transit", o, d, || self.inner.transit_route(o, d))
    }

    fn ride_estimate(&self, o: GeoPoint, d: GeoPoint) -> Result<RideEstimate, ProviderError> {
        self.cached("ride", o, d, || self.inner.ride_estimate(o, d))
    }

    fn walk_route(&self, o: GeoPoint, d: GeoPoint) -> RouteStep {
        self.inner.walk_route(o, d)
    }
}
