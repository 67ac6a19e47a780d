//! Questionnaire instruments recorded alongside trials.
//!
//! Instruments are generic scale definitions: an item count, a response
//! range, and how items combine into a raw total. Item wording lives with the
//! administering UI, never here.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentId {
    Fatigue,
    Imi,
    NasaTlxRaw,
    Stress,
    Confidence,
    StimulantText,
    InterfaceName,
    DailyUsage,
}

impl InstrumentId {
    pub const ALL: [InstrumentId; 8] = [
        InstrumentId::Fatigue,
        InstrumentId::Imi,
        InstrumentId::NasaTlxRaw,
        InstrumentId::Stress,
        InstrumentId::Confidence,
        InstrumentId::StimulantText,
        InstrumentId::InterfaceName,
        InstrumentId::DailyUsage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InstrumentId::Fatigue => "fatigue",
            InstrumentId::Imi => "imi",
            InstrumentId::NasaTlxRaw => "nasa_tlx_raw",
            InstrumentId::Stress => "stress",
            InstrumentId::Confidence => "confidence",
            InstrumentId::StimulantText => "stimulant_text",
            InstrumentId::InterfaceName => "interface_name",
            InstrumentId::DailyUsage => "daily_usage",
        }
    }

    pub fn definition(self) -> Instrument {
        use Aggregation::*;
        use ResponseKind::*;
        let (items, kind, aggregation) = match self {
            InstrumentId::Fatigue => (11, Integer { min: 0, max: 3 }, Sum),
            InstrumentId::Imi => (22, Integer { min: 1, max: 7 }, Mean),
            InstrumentId::NasaTlxRaw => (6, Integer { min: 0, max: 100 }, Mean),
            InstrumentId::Stress => (30, Integer { min: 1, max: 4 }, Mean),
            InstrumentId::Confidence => (1, Integer { min: 1, max: 5 }, Sum),
            InstrumentId::StimulantText => (1, Text, None),
            InstrumentId::InterfaceName => (1, Text, None),
            InstrumentId::DailyUsage => (1, Integer { min: 0, max: 24 }, Sum),
        };
        Instrument { id: self, items, kind, aggregation }
    }
}

impl fmt::Display for InstrumentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstrumentId {
    type Err = CovariateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InstrumentId::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| CovariateError::UnknownInstrument(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResponseKind {
    Integer { min: i64, max: i64 },
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Sum,
    Mean,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instrument {
    pub id: InstrumentId,
    pub items: usize,
    pub kind: ResponseKind,
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CovariateError {
    #[error("unknown instrument {0:?}")]
    UnknownInstrument(String),
    #[error("{instrument} expects {expected} responses, got {got}")]
    WrongCount { instrument: InstrumentId, expected: usize, got: usize },
    #[error("{instrument} item {item}: response out of range or of the wrong type")]
    BadResponse { instrument: InstrumentId, item: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRecord {
    pub instrument_id: InstrumentId,
    pub responses: Vec<Response>,
    pub raw_total: Option<f64>,
    pub administered_at: DateTime<Utc>,
}

impl Instrument {
    /// Check responses and compute the raw total.
    pub fn record(
        &self,
        responses: Vec<Response>,
        administered_at: DateTime<Utc>,
    ) -> Result<CovariateRecord, CovariateError> {
        if responses.len() != self.items {
            return Err(CovariateError::WrongCount { instrument: self.id, expected: self.items, got: responses.len() });
        }
        let mut ints = Vec::with_capacity(responses.len());
        for (item, r) in responses.iter().enumerate() {
            match (self.kind, r) {
                (ResponseKind::Integer { min, max }, Response::Int(v)) if (min..=max).contains(v) => ints.push(*v),
                (ResponseKind::Text, Response::Text(_)) => {}
                _ => return Err(CovariateError::BadResponse { instrument: self.id, item }),
            }
        }
        let sum: i64 = ints.iter().sum();
        let raw_total = match self.aggregation {
            Aggregation::Sum => Some(sum as f64),
            Aggregation::Mean => Some(sum as f64 / ints.len() as f64),
            Aggregation::None => None,
        };
        Ok(CovariateRecord { instrument_id: self.id, responses, raw_total, administered_at })
    }
}

impl CovariateRecord {
    /// Re-check a stored record against its instrument definition.
    pub fn verify(&self) -> Result<(), CovariateError> {
        let fresh = self.instrument_id.definition().record(self.responses.clone(), self.administered_at)?;
        if fresh.raw_total != self.raw_total {
            return Err(CovariateError::BadResponse { instrument: self.instrument_id, item: 0 });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn now() -> DateTime<Utc> {
        DateTime::from_timestamp(1_700_000_000, 0).unwrap()
    }

    #[test]
    fn fatigue_sums_eleven_items() {
        let inst = InstrumentId::Fatigue.definition();
        let r = inst.record((0..11).map(|i| Response::Int(i % 4)).collect(), now()).unwrap();
        assert_eq!(r.raw_total, Some((0..11).map(|i| (i % 4) as f64).sum()));
        r.verify().unwrap();
    }

    #[test]
    fn confidence_range_is_enforced() {
        let inst = InstrumentId::Confidence.definition();
        assert!(inst.record(vec![Response::Int(5)], now()).is_ok());
        assert!(matches!(inst.record(vec![Response::Int(6)], now()), Err(CovariateError::BadResponse { .. })));
        assert!(matches!(inst.record(vec![], now()), Err(CovariateError::WrongCount { .. })));
    }

    #[test]
    fn text_instruments_have_no_total() {
        let inst = InstrumentId::StimulantText.definition();
        let r = inst.record(vec![Response::Text("coffee".into())], now()).unwrap();
        assert_eq!(r.raw_total, None);
        assert!(inst.record(vec![Response::Int(1)], now()).is_err());
    }

    #[test]
    fn mean_aggregation() {
        let inst = InstrumentId::NasaTlxRaw.definition();
        let r = inst.record([10, 20, 30, 40, 50, 60].map(Response::Int).to_vec(), now()).unwrap();
        assert_eq!(r.raw_total, Some(35.0));
    }

    #[test]
    fn ids_parse() {
        for id in InstrumentId::ALL {
            assert_eq!(id.as_str().parse::<InstrumentId>().unwrap(), id);
        }
        assert!("wst".parse::<InstrumentId>().is_err());
    }
}
