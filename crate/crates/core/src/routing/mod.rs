//! Guide layouts for the four transmission designs, tendon path solving and
//! joint moment arms.

mod design;
mod layout;
mod moment_arm;
mod path;

pub use design::{instantiate_design, DesignSpec, DesignVariant, Placement};
pub use layout::{Engagement, GuideElement, GuideKind, GuideLayout};
pub use moment_arm::{
    dip_hyperextension_risk, moment_arm_geometric, moment_arm_table, moment_arm_virtual_work,
    FD_STEP_RAD,
};
pub use path::{solve_path, Arc, Contact, PathSegment, TendonPath};

pub(crate) use moment_arm::{arms_at, grid_label, length_at, require_positive};
