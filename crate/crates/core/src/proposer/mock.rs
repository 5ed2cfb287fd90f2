use std::path::Path;
use std::time::Duration;

use super::{check_temperature, Proposer, ProposerError, ProposerRequest, ProposerResponse, Provider};

/// Replays scripted responses: round `r` (zero-based) gets fixture `r`.
#[derive(Debug, Clone, Default)]
pub struct MockProposer {
    fixtures: Vec<String>,
}

impl MockProposer {
    pub fn new(fixtures: Vec<String>) -> Self {
        Self { fixtures }
    }

    /// Loads every `<number>.txt` in `dir`, ordered by number.
    pub fn from_dir(dir: &Path) -> Result<Self, ProposerError> {
        let io = |source| ProposerError::Fixture {
            path: dir.to_path_buf(),
            source,
        };
        let mut numbered = Vec::new();
        for entry in std::fs::read_dir(dir).map_err(io)? {
            let path = entry.map_err(io)?.path();
            if path.extension().is_some_and(|e| e == "txt") {
                if let Some(num) = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.parse::<u64>().ok())
                {
                    numbered.push((num, path));
                }
            }
        }
        numbered.sort();
        let fixtures = numbered
            .into_iter()
            .map(|(_, path)| {
                std::fs::read_to_string(&path).map_err(|source| ProposerError::Fixture { path, source })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { fixtures })
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }
}

impl Proposer for MockProposer {
    fn provider(&self) -> Provider {
        Provider::Mock
    }

    fn propose(&self, req: &ProposerRequest<'_>) -> Result<ProposerResponse, ProposerError> {
        check_temperature(req.temperature)?;
        let text = self
            .fixtures
            .get(req.round_index)
            .ok_or(ProposerError::FixtureExhausted {
                round: req.round_index,
                available: self.fixtures.len(),
            })?;
        if text.is_empty() {
            return Err(ProposerError::EmptyText);
        }
        Ok(ProposerResponse {
            text: text.clone(),
            latency: Duration::ZERO,
            provider: Provider::Mock,
            retries: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::worked_example;
    use crate::prompt::render_prompt;

    #[test]
    fn replays_in_round_order() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("2.txt"), "second").unwrap();
        std::fs::write(dir.path().join("1.txt"), "x: (0, 1) (1, 0)\n\nz: (1, 2)\n").unwrap();
        std::fs::write(dir.path().join("notes.md"), "ignored").unwrap();
        let mock = MockProposer::from_dir(dir.path()).unwrap();
        assert_eq!(mock.len(), 2);

        let inst = worked_example();
        let prompt = render_prompt(&inst, &[]).unwrap();
        let mut req = ProposerRequest {
            prompt: &prompt,
            instance: &inst,
            temperature: 1.0,
            seed: None,
            round_index: 0,
        };
        assert_eq!(mock.propose(&req).unwrap().text, "x: (0, 1) (1, 0)\n\nz: (1, 2)\n");
        req.round_index = 1;
        assert_eq!(mock.propose(&req).unwrap().text, "second");
        req.round_index = 2;
        assert!(matches!(
            mock.propose(&req),
            Err(ProposerError::FixtureExhausted { round: 2, available: 2 })
        ));
    }
}
