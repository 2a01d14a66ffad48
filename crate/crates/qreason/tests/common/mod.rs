#![allow(dead_code)]

use qreason_core::data::{align, Example, Instance, Labels};
use qreason_core::text::tokenize;
use qreason_core::{Polarity, ReasoningType, ValueDir, WorldOrder};

pub const GRAVITY: &str =
    "The gravitational force increases with mass and decreases with the distance between the bodies.";
pub const TELESCOPE: &str = "The larger the light collecting area, the more light a telescope gathers and the higher resolution (ability to see fine detail) it has.";

fn pos(text: &str, needle: &str) -> Vec<usize> {
    align(&tokenize(text), needle).unwrap_or_else(|| panic!("`{needle}` not in `{text}`"))
}

fn instance(id: &str, knowledge: &str, question: &str, options: [&str; 2], answer: usize) -> Instance {
    Instance {
        id: id.into(),
        knowledge: knowledge.into(),
        question: question.into(),
        options: options.map(String::from),
        answer,
        annotation: None,
    }
}

pub fn prediction(id: &str, direction: &str, value: ValueDir) -> Example {
    let inst = instance(
        id,
        GRAVITY,
        &format!(
            "John was watching the physics calculator and noted a profound finding. As the mass {direction}, the pull of the gravitational force"
        ),
        ["Decreases", "Increases"],
        if value == ValueDir::Up { 1 } else { 0 },
    );
    let statement = inst.statement();
    let labels = Labels {
        cause: Some(pos(GRAVITY, "mass")),
        effect: Some(pos(GRAVITY, "gravitational force")),
        world: Some(pos(&statement, &format!("mass {direction}"))),
        polarity: Some(Polarity::Positive),
        value: Some(value),
        kind: Some(ReasoningType::Prediction),
        ..Labels::default()
    };
    Example { instance: inst, labels }
}

pub fn comparison(id: &str, w1: &str, w2: &str, order: WorldOrder) -> Example {
    let inst = instance(
        id,
        TELESCOPE,
        &format!("Compared to a {w1}, would a {w2} collect"),
        ["more light", "less light"],
        if order == WorldOrder::Less { 0 } else { 1 },
    );
    let statement = inst.statement();
    let labels = Labels {
        cause: Some(pos(TELESCOPE, "collecting area")),
        effect: Some(pos(TELESCOPE, "light a")[..1].to_vec()),
        world1: Some(pos(&statement, w1)),
        world2: Some(pos(&statement, w2)),
        polarity: Some(Polarity::Positive),
        comparison: Some(order),
        kind: Some(ReasoningType::Comparison),
        ..Labels::default()
    };
    Example { instance: inst, labels }
}

/// The four worked examples with their expected deduction sentences.
pub fn worked_examples() -> Vec<(Example, &'static str)> {
    vec![
        (
            prediction("QRQA-10004-2", "increases", ValueDir::Up),
            "mass increases will cause more gravitational force.",
        ),
        (
            prediction("QRQA-10004-2-flip", "decreases", ValueDir::Down),
            "mass decreases will cause less gravitational force.",
        ),
        (
            comparison("QRQA-10228-1", "1 inch wide telescope", "100 meter telescope", WorldOrder::Less),
            "1 inch wide telescope will cause less light than 100 meter telescope.",
        ),
        (
            comparison("QRQA-10228-1-flip", "100 meter wide telescope", "1 inch telescope", WorldOrder::Greater),
            "100 meter wide telescope will cause more light than 1 inch telescope.",
        ),
    ]
}
