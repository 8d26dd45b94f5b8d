use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Endpoint {
    Server,
    /// Client by federation index.
    Client(usize),
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Server => f.write_str("SERVER"),
            Endpoint::Client(k) => write!(f, "client:{k}"),
        }
    }
}

/// One parameter transfer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferEvent {
    /// Zero-based round the transfer belongs to.
    pub round: usize,
    /// Period inside the round, for peer exchanges in periodic strategies.
    pub period: Option<usize>,
    pub from: Endpoint,
    pub to: Endpoint,
    pub payload_dim: usize,
}

/// Append-only record of every weight transfer in a run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommLedger {
    events: Vec<TransferEvent>,
}

impl CommLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log_transfer(
        &mut self,
        round: usize,
        period: Option<usize>,
        from: Endpoint,
        to: Endpoint,
        payload_dim: usize,
    ) {
        self.events.push(TransferEvent {
            round,
            period,
            from,
            to,
            payload_dim,
        });
    }

    pub fn events(&self) -> &[TransferEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events_in_round(&self, round: usize) -> usize {
        self.events.iter().filter(|e| e.round == round).count()
    }

    /// Total scalars moved.
    pub fn payload_total(&self) -> usize {
        self.events.iter().map(|e| e.payload_dim).sum()
    }

    /// Events involving the server as sender or receiver.
    pub fn server_events(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.from == Endpoint::Server || e.to == Endpoint::Server)
            .count()
    }

    /// Events sorted by (round, period, from, to); the order in which
    /// concurrent transfers were appended is not significant.
    pub fn canonical(&self) -> Vec<TransferEvent> {
        let mut events = self.events.clone();
        events.sort_by_key(|e| (e.round, e.period, e.from, e.to));
        events
    }
}
