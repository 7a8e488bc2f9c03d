use super::AffinityError;
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// Whole-label embeddings from a sentence-embedding service.
///
/// Wire format: `POST <url>/embed` with `{"texts": [..]}` answered by
/// `{"embeddings": [[..], ..]}`, one vector per text in order.
#[derive(Debug, Clone)]
pub struct CoarseProvider {
    url: String,
    http: reqwest::Client,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedReply {
    embeddings: Vec<Vec<f64>>,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

impl CoarseProvider {
    pub fn new(url: &str, timeout: Duration) -> Result<Self, AffinityError> {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AffinityError::ProviderUnavailable(e.to_string()))?;
        Ok(CoarseProvider { url: url.trim_end_matches('/').to_string(), http })
    }

    pub async fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, AffinityError> {
        let unavailable = |e: reqwest::Error| AffinityError::ProviderUnavailable(e.to_string());
        let reply = self
            .http
            .post(format!("{}/embed", self.url))
            .json(&EmbedRequest { texts })
            .send()
            .await
            .map_err(unavailable)?
            .error_for_status()
            .map_err(unavailable)?;
        let body: EmbedReply = reply.json().await.map_err(unavailable)?;
        if body.embeddings.len() != texts.len() {
            return Err(AffinityError::ProviderUnavailable(format!(
                "asked for {} embeddings, got {}",
                texts.len(),
                body.embeddings.len()
            )));
        }
        Ok(body.embeddings)
    }

    pub async fn coarse_affinity(&self, label_x: &str, label_y: &str) -> Result<f64, AffinityError> {
        let v = self.embed(&[label_x, label_y]).await?;
        Ok(cosine(&v[0], &v[1]))
    }

    pub async fn score_batch(&self, label: &str, candidates: &[String]) -> Result<Vec<f64>, AffinityError> {
        if candidates.is_empty() {
            return Ok(Vec::new());
        }
        let mut texts: Vec<&str> = Vec::with_capacity(candidates.len() + 1);
        texts.push(label);
        texts.extend(candidates.iter().map(String::as_str));
        let v = self.embed(&texts).await?;
        Ok(v[1..].iter().map(|c| cosine(&v[0], c)).collect())
    }
}
