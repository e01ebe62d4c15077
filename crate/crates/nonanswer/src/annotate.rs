//! Corpus annotation: render prompts, serve cached replies, send the rest
//! through a bounded worker pool and record every reply through a single
//! cache writer.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;
use std::time::Duration;

use log::{info, warn};
use nonanswer_core::corpus::QaExchange;
use nonanswer_core::elicitor::{render_prompt_with, validate_reply, BackendError, NorAnnotation, PromptParams, PromptRequest};
use serde::{Deserialize, Serialize};

use crate::backends::Completer;
use crate::cache::{Cache, CacheEntry};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotateOptions {
    pub jobs: usize,
    pub max_retries: u32,
    pub backoff: Duration,
    pub params: PromptParams,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        AnnotateOptions {
            jobs: 4,
            max_retries: 3,
            backoff: Duration::from_millis(500),
            params: PromptParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotateStats {
    pub exchanges: usize,
    pub cached: usize,
    pub sent: usize,
    pub retries: usize,
    pub errors: usize,
}

/// Sends one request, retrying transient failures with exponential
/// backoff. Returns the completion and the number of retries.
pub fn send_with_retry(
    backend: &dyn Completer,
    request: &PromptRequest,
    rep: Option<u32>,
    opts: &AnnotateOptions,
) -> Result<(String, u32), BackendError> {
    let mut retries = 0;
    loop {
        match backend.complete(request, rep) {
            Ok(text) => return Ok((text, retries)),
            Err(BackendError::Transient { status, message }) if retries < opts.max_retries => {
                let wait = opts.backoff.saturating_mul(1 << retries.min(16));
                warn!(
                    "{}: transient failure{} ({message}); retry {} in {wait:?}",
                    request.conver_id,
                    status.map(|s| format!(" HTTP {s}")).unwrap_or_default(),
                    retries + 1
                );
                std::thread::sleep(wait);
                retries += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Sort key: transcript id, then exchange order.
pub fn conver_order(conver_id: &str) -> (String, u64) {
    match conver_id.rsplit_once('-') {
        Some((t, o)) => (t.to_string(), o.parse().unwrap_or(u64::MAX)),
        None => (conver_id.to_string(), 0),
    }
}

/// Annotates every exchange once per prompt hash. Already cached prompts
/// are not re-sent. Output is ordered by conversation id. When the
/// backend fails for good, completed replies stay in the cache and the
/// run stops with a backend error.
pub fn annotate_corpus(
    exchanges: &[QaExchange],
    backend: &dyn Completer,
    cache: &mut Cache,
    rep: Option<u32>,
    opts: &AnnotateOptions,
) -> Result<(Vec<NorAnnotation>, AnnotateStats)> {
    let model_id = backend.model_id().to_string();
    let requests: Vec<PromptRequest> = exchanges.iter().map(|x| render_prompt_with(x, opts.params)).collect();
    let hashes: Vec<String> = requests.iter().map(PromptRequest::prompt_hash).collect();

    let mut stats = AnnotateStats {
        exchanges: exchanges.len(),
        ..AnnotateStats::default()
    };
    let mut out: Vec<Option<NorAnnotation>> = vec![None; exchanges.len()];
    let mut pending = Vec::new();
    // Identical prompts are sent once.
    let mut first_of_hash = std::collections::HashMap::new();
    for (i, h) in hashes.iter().enumerate() {
        if let Some(e) = cache.get(h, rep) {
            out[i] = Some(e.annotation.clone().with_ids(&requests[i].conver_id, &model_id));
            stats.cached += 1;
        } else if let std::collections::hash_map::Entry::Vacant(e) = first_of_hash.entry(h.clone()) {
            e.insert(i);
            pending.push(i);
        }
    }

    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let mut failure: Option<BackendError> = None;
    let (tx, rx) = mpsc::channel::<(usize, Result<(String, u32), BackendError>)>();
    std::thread::scope(|s| -> Result<()> {
        for _ in 0..opts.jobs.max(1).min(pending.len().max(1)) {
            let tx = tx.clone();
            let (next, stop, pending, requests) = (&next, &stop, &pending, &requests);
            s.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&i) = pending.get(k) else { break };
                let r = send_with_retry(backend, &requests[i], rep, opts);
                if r.is_err() {
                    stop.store(true, Ordering::Relaxed);
                }
                if tx.send((k, r)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        // Replies are appended in request order so reruns write the same cache.
        let mut ready = std::collections::BTreeMap::new();
        let mut flushed = 0;
        for (k, r) in rx {
            match r {
                Ok((raw, retries)) => {
                    let i = pending[k];
                    let annotation = validate_reply(&raw).with_ids(&requests[i].conver_id, &model_id);
                    stats.sent += 1;
                    stats.retries += retries as usize;
                    out[i] = Some(annotation.clone());
                    ready.insert(
                        k,
                        CacheEntry {
                            prompt_hash: hashes[i].clone(),
                            rep,
                            retries,
                            annotation,
                        },
                    );
                    while let Some(e) = ready.remove(&flushed) {
                        cache.append(e)?;
                        flushed += 1;
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        for e in ready.into_values() {
            cache.append(e)?;
        }
        Ok(())
    })?;
    if let Some(e) = failure {
        return Err(CliError::Backend(format!(
            "{model_id}: {e}; {} replies cached, rerun to resume",
            stats.sent
        )));
    }
    for (i, h) in hashes.iter().enumerate() {
        if out[i].is_none() {
            let first = &out[first_of_hash[h]];
            out[i] = first.as_ref().map(|a| a.clone().with_ids(&requests[i].conver_id, &model_id));
        }
    }
    let mut annotations: Vec<NorAnnotation> = out.into_iter().map(|a| a.expect("every exchange answered")).collect();
    annotations.sort_by_cached_key(|a| conver_order(&a.conver_id));
    stats.errors = annotations.iter().filter(|a| a.is_error()).count();
    info!(
        "{model_id}: {} exchanges, {} cached, {} sent, {} retries, {} ERROR replies",
        stats.exchanges, stats.cached, stats.sent, stats.retries, stats.errors
    );
    Ok((annotations, stats))
}
