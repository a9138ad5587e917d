use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WidgetClass {
    RadioButton,
    Checkbox,
    ListBox,
    NumericIncrementer,
    DropdownList,
    Textbox,
    NextButton,
    Slider,
    Hover,
    Panning,
    Brush,
    ZoomQualitative,
    ZoomQuantitative,
}

impl WidgetClass {
    pub const ALL: [WidgetClass; 13] = [
        WidgetClass::RadioButton,
        WidgetClass::Checkbox,
        WidgetClass::ListBox,
        WidgetClass::NumericIncrementer,
        WidgetClass::DropdownList,
        WidgetClass::Textbox,
        WidgetClass::NextButton,
        WidgetClass::Slider,
        WidgetClass::Hover,
        WidgetClass::Panning,
        WidgetClass::Brush,
        WidgetClass::ZoomQualitative,
        WidgetClass::ZoomQuantitative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WidgetClass::RadioButton => "radio_button",
            WidgetClass::Checkbox => "checkbox",
            WidgetClass::ListBox => "list_box",
            WidgetClass::NumericIncrementer => "numeric_incrementer",
            WidgetClass::DropdownList => "dropdown_list",
            WidgetClass::Textbox => "textbox",
            WidgetClass::NextButton => "next_button",
            WidgetClass::Slider => "slider",
            WidgetClass::Hover => "hover",
            WidgetClass::Panning => "panning",
            WidgetClass::Brush => "brush",
            WidgetClass::ZoomQualitative => "zoom_qualitative",
            WidgetClass::ZoomQuantitative => "zoom_quantitative",
        }
    }

    pub fn from_name(name: &str) -> Option<WidgetClass> {
        WidgetClass::ALL.into_iter().find(|c| c.as_str() == name)
    }

    pub fn load_group(self) -> LoadGroup {
        classify_widget(self)
    }
}

impl fmt::Display for WidgetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Widget taxonomy by the load a widget places on the DBMS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadGroup {
    /// Single query, low volume.
    SingleLow,
    /// Single query, high volume (continuous updates).
    SingleHigh,
    /// Many queries, high volume (several aggregation levels at once).
    ManyHigh,
}

impl LoadGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadGroup::SingleLow => "single_low",
            LoadGroup::SingleHigh => "single_high",
            LoadGroup::ManyHigh => "many_high",
        }
    }

    /// Queries issued per dirty node for a trigger in this group.
    pub fn queries_per_node(self, detail_levels: usize) -> usize {
        match self {
            LoadGroup::SingleLow | LoadGroup::SingleHigh => 1,
            LoadGroup::ManyHigh => detail_levels,
        }
    }
}

impl fmt::Display for LoadGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_widget(class: WidgetClass) -> LoadGroup {
    use WidgetClass::*;
    match class {
        RadioButton | Checkbox | ListBox | NumericIncrementer | DropdownList | Textbox
        | NextButton => LoadGroup::SingleLow,
        Slider | Hover | Panning => LoadGroup::SingleHigh,
        Brush | ZoomQualitative | ZoomQuantitative => LoadGroup::ManyHigh,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_table() {
        assert_eq!(classify_widget(WidgetClass::RadioButton), LoadGroup::SingleLow);
        assert_eq!(classify_widget(WidgetClass::Slider), LoadGroup::SingleHigh);
        assert_eq!(classify_widget(WidgetClass::Brush), LoadGroup::ManyHigh);

        let count = |g| WidgetClass::ALL.iter().filter(|c| c.load_group() == g).count();
        assert_eq!(count(LoadGroup::SingleLow), 7);
        assert_eq!(count(LoadGroup::SingleHigh), 3);
        assert_eq!(count(LoadGroup::ManyHigh), 3);
    }

    #[test]
    fn names_round_trip() {
        for class in WidgetClass::ALL {
            assert_eq!(WidgetClass::from_name(class.as_str()), Some(class));
            let json = serde_json::to_string(&class).unwrap();
            assert_eq!(json, format!("\"{}\"", class.as_str()));
        }
    }
}
