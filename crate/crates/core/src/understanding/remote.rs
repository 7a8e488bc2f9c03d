use super::{DataType, QuError};
use crate::graph::PhraseTriplePattern;
use serde::{Deserialize, Serialize};
use std::time::Duration;

/// HTTP client for an externally hosted pattern extractor and classifier.
#[derive(Debug, Clone)]
pub struct RemoteQu {
    base: String,
    http: reqwest::Client,
}

#[derive(Serialize)]
struct QuestionBody<'a> {
    question: &'a str,
}

#[derive(Deserialize)]
struct ExtractReply {
    patterns: Vec<PhraseTriplePattern>,
}

#[derive(Deserialize)]
struct DataTypeReply {
    data_type: String,
}

impl RemoteQu {
    pub fn new(endpoint_url: &str, timeout: Duration) -> Result<Self, QuError> {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| QuError::ProviderUnavailable(e.to_string()))?;
        Ok(RemoteQu { base: endpoint_url.trim_end_matches('/').to_string(), http })
    }

    async fn post<T: for<'de> Deserialize<'de>>(&self, path: &str, question: &str) -> Result<T, QuError> {
        let unavailable = |e: reqwest::Error| QuError::ProviderUnavailable(e.to_string());
        let reply = self
            .http
            .post(format!("{}/{path}", self.base))
            .json(&QuestionBody { question })
            .send()
            .await
            .map_err(unavailable)?;
        let status = reply.status();
        if !status.is_success() {
            return Err(QuError::ProviderUnavailable(format!("{path} returned HTTP {status}")));
        }
        reply.json().await.map_err(|e| QuError::ProviderUnavailable(format!("bad {path} reply: {e}")))
    }

    pub async fn extract(&self, question: &str) -> Result<Vec<PhraseTriplePattern>, QuError> {
        Ok(self.post::<ExtractReply>("extract", question).await?.patterns)
    }

    pub async fn data_type(&self, question: &str) -> Result<DataType, QuError> {
        let reply: DataTypeReply = self.post("datatype", question).await?;
        reply.data_type.parse().map_err(QuError::ProviderUnavailable)
    }
}
