//! Static country table: ISO-3166 alpha-3 code, display name, region group.

/// One row of the static country table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountryInfo {
    pub code: &'static str,
    pub name: &'static str,
    pub region: &'static str,
}

pub(crate) const EAST_ASIA: &str = "East Asia";
pub(crate) const LATIN_AMERICA: &str = "Latin America and the Caribbean";
pub(crate) const MIDDLE_EAST: &str = "Middle East and North Africa";
pub(crate) const NORTH_EASTERN_EUROPE: &str = "North and Eastern Europe";
pub(crate) const SOUTHERN_EUROPE: &str = "Southern Europe";
pub(crate) const SUB_SAHARAN_AFRICA: &str = "Sub-Saharan Africa";

const fn c(code: &'static str, name: &'static str, region: &'static str) -> CountryInfo {
    CountryInfo { code, name, region }
}

static COUNTRIES: &[CountryInfo] = &[
    // East Asia
    c("MYS", "Malaysia", EAST_ASIA),
    c("KHM", "Cambodia", EAST_ASIA),
    c("CHN", "China", EAST_ASIA),
    c("HKG", "Hong Kong", EAST_ASIA),
    c("IDN", "Indonesia", EAST_ASIA),
    c("JPN", "Japan", EAST_ASIA),
    c("KOR", "Korea, Republic of", EAST_ASIA),
    c("LAO", "Laos", EAST_ASIA),
    c("MNG", "Mongolia", EAST_ASIA),
    c("PHL", "Philippines", EAST_ASIA),
    c("SGP", "Singapore", EAST_ASIA),
    c("TWN", "Taiwan", EAST_ASIA),
    c("THA", "Thailand", EAST_ASIA),
    c("VNM", "Vietnam", EAST_ASIA),
    // Latin America and the Caribbean
    c("ECU", "Ecuador", LATIN_AMERICA),
    c("CRI", "Costa Rica", LATIN_AMERICA),
    c("CUB", "Cuba", LATIN_AMERICA),
    c("DOM", "Dominican Republic", LATIN_AMERICA),
    c("SLV", "El Salvador", LATIN_AMERICA),
    c("GTM", "Guatemala", LATIN_AMERICA),
    c("HND", "Honduras", LATIN_AMERICA),
    c("JAM", "Jamaica", LATIN_AMERICA),
    c("NIC", "Nicaragua", LATIN_AMERICA),
    c("PAN", "Panama", LATIN_AMERICA),
    c("PRY", "Paraguay", LATIN_AMERICA),
    c("PRI", "Puerto Rico", LATIN_AMERICA),
    c("URY", "Uruguay", LATIN_AMERICA),
    // Middle East and North Africa
    c("YEM", "Yemen", MIDDLE_EAST),
    c("OMN", "Oman", MIDDLE_EAST),
    c("SYR", "Syria", MIDDLE_EAST),
    c("DJI", "Djibouti", MIDDLE_EAST),
    c("EGY", "Egypt", MIDDLE_EAST),
    c("ISR", "Israel", MIDDLE_EAST),
    c("JOR", "Jordan", MIDDLE_EAST),
    c("LBN", "Lebanon", MIDDLE_EAST),
    c("MAR", "Morocco", MIDDLE_EAST),
    c("TUN", "Tunisia", MIDDLE_EAST),
    c("TUR", "Turkey", MIDDLE_EAST),
    // North and Eastern Europe (New Zealand is grouped with Europe)
    c("DNK", "Denmark", NORTH_EASTERN_EUROPE),
    c("NLD", "Netherlands", NORTH_EASTERN_EUROPE),
    c("NZL", "New Zealand", NORTH_EASTERN_EUROPE),
    c("NOR", "Norway", NORTH_EASTERN_EUROPE),
    c("GBR", "United Kingdom", NORTH_EASTERN_EUROPE),
    c("BEL", "Belgium", NORTH_EASTERN_EUROPE),
    c("FIN", "Finland", NORTH_EASTERN_EUROPE),
    c("FRA", "France", NORTH_EASTERN_EUROPE),
    c("DEU", "Germany", NORTH_EASTERN_EUROPE),
    c("IRL", "Ireland", NORTH_EASTERN_EUROPE),
    c("SWE", "Sweden", NORTH_EASTERN_EUROPE),
    c("CHE", "Switzerland", NORTH_EASTERN_EUROPE),
    c("CZE", "Czech Republic", NORTH_EASTERN_EUROPE),
    c("HUN", "Hungary", NORTH_EASTERN_EUROPE),
    c("POL", "Poland", NORTH_EASTERN_EUROPE),
    // Southern Europe
    c("GRC", "Greece", SOUTHERN_EUROPE),
    c("ITA", "Italy", SOUTHERN_EUROPE),
    c("PRT", "Portugal", SOUTHERN_EUROPE),
    c("ESP", "Spain", SOUTHERN_EUROPE),
    // Sub-Saharan Africa
    c("GNQ", "Equatorial Guinea", SUB_SAHARAN_AFRICA),
    c("BEN", "Benin", SUB_SAHARAN_AFRICA),
    c("BFA", "Burkina Faso", SUB_SAHARAN_AFRICA),
    c("BDI", "Burundi", SUB_SAHARAN_AFRICA),
    c("CMR", "Cameroon", SUB_SAHARAN_AFRICA),
    c("CPV", "Cape Verde", SUB_SAHARAN_AFRICA),
    c("CAF", "Central African Republic", SUB_SAHARAN_AFRICA),
    c("TCD", "Chad", SUB_SAHARAN_AFRICA),
    c("CIV", "Cote d'Ivoire", SUB_SAHARAN_AFRICA),
    c("GMB", "Gambia", SUB_SAHARAN_AFRICA),
    c("GHA", "Ghana", SUB_SAHARAN_AFRICA),
    c("GIN", "Guinea", SUB_SAHARAN_AFRICA),
    c("KEN", "Kenya", SUB_SAHARAN_AFRICA),
    c("LSO", "Lesotho", SUB_SAHARAN_AFRICA),
    c("LBR", "Liberia", SUB_SAHARAN_AFRICA),
    c("MDG", "Madagascar", SUB_SAHARAN_AFRICA),
    c("MWI", "Malawi", SUB_SAHARAN_AFRICA),
    c("MLI", "Mali", SUB_SAHARAN_AFRICA),
    c("MRT", "Mauritania", SUB_SAHARAN_AFRICA),
    c("MUS", "Mauritius", SUB_SAHARAN_AFRICA),
    c("MOZ", "Mozambique", SUB_SAHARAN_AFRICA),
    c("NAM", "Namibia", SUB_SAHARAN_AFRICA),
    c("NER", "Niger", SUB_SAHARAN_AFRICA),
    c("SEN", "Senegal", SUB_SAHARAN_AFRICA),
    c("SOM", "Somalia", SUB_SAHARAN_AFRICA),
    c("SDN", "Sudan", SUB_SAHARAN_AFRICA),
    c("SWZ", "Swaziland", SUB_SAHARAN_AFRICA),
    c("TZA", "Tanzania", SUB_SAHARAN_AFRICA),
    c("TGO", "Togo", SUB_SAHARAN_AFRICA),
    c("UGA", "Uganda", SUB_SAHARAN_AFRICA),
    c("ZMB", "Zambia", SUB_SAHARAN_AFRICA),
    c("ZWE", "Zimbabwe", SUB_SAHARAN_AFRICA),
    // Dropped from the African pool; kept so fetched data carries a region.
    c("RWA", "Rwanda", SUB_SAHARAN_AFRICA),
    c("COG", "Congo, Republic of", SUB_SAHARAN_AFRICA),
    c("NGA", "Nigeria", SUB_SAHARAN_AFRICA),
    c("BWA", "Botswana", SUB_SAHARAN_AFRICA),
];

/// The whole static table.
pub fn country_table() -> &'static [CountryInfo] {
    COUNTRIES
}

pub fn country_by_code(code: &str) -> Option<&'static CountryInfo> {
    COUNTRIES.iter().find(|c| c.code.eq_ignore_ascii_case(code))
}
