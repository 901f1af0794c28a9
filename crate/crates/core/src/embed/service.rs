use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::http::{JsonClient, Method};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

#[derive(Serialize)]
struct EncodeRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EncodeResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

/// Remote encoder: `POST {texts: [..]}` → `{dim, vectors: [[..], ..]}`.
#[derive(Debug, Clone)]
pub struct ServiceProvider {
    endpoint: String,
    dim: usize,
    http: JsonClient,
}

impl ServiceProvider {
    pub fn new(endpoint: impl Into<String>, dim: usize, timeout: Duration) -> Result<Self, EmbedError> {
        if dim == 0 {
            return Err(EmbedError::ZeroDim);
        }
        Ok(Self {
            endpoint: endpoint.into(),
            dim,
            http: JsonClient::new(timeout),
        })
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp: EncodeResponse = self.http.call(Method::Post, &self.endpoint, &EncodeRequest { texts })?;
        if resp.dim != self.dim {
            return Err(EmbedError::Dim { expected: self.dim, got: resp.dim });
        }
        if resp.vectors.len() != texts.len() {
            return Err(EmbedError::Format(format!(
                "service returned {} vectors for {} texts",
                resp.vectors.len(),
                texts.len()
            )));
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                let v = EmbeddingVector::new(v)?;
                if v.dim() != self.dim {
                    return Err(EmbedError::Dim { expected: self.dim, got: v.dim() });
                }
                Ok(v)
            })
            .collect()
    }
}

impl EmbeddingProvider for ServiceProvider {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.request(&[text])?.remove(0))
    }

    fn encode_batch(&self, items: &[(&str, &str)]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let texts: Vec<&str> = items.iter().map(|(_, t)| *t).collect();
        self.request(&texts)
    }
}
