//! Rectangle encoding, IoU, angle offsets and lifting an image grasp into the
//! world frame of a downward-looking camera.
//!
//! cargo run --release --example grasp_geometry

use pixgrasp::grasp::{angle_offset, grasp_from_rect, grasp_image_to_world, rect_iou, CameraModel, GraspRectangle};

fn main() -> pixgrasp::Result<()> {
    let r = grasp_from_rect(&[[40.0, 45.0], [60.0, 45.0], [60.0, 55.0], [40.0, 55.0]])?;
    println!("corners -> center {:?}, angle {:.3} rad, width {}, height {}", r.center, r.angle, r.width, r.height);

    let a = GraspRectangle::new([100.0, 100.0], 0.3, 60.0, 20.0);
    for shift in [0.0, 10.0, 20.0, 40.0] {
        println!("IoU with copy shifted {shift:>4} px: {:.3}", rect_iou(&a, &a.translated(shift, 0.0), (200, 200)));
    }
    for deg in [10.0f64, 90.0, 170.0, 180.0] {
        println!("offset 0 deg vs {deg:>5} deg: {:.1} deg", angle_offset(0.0, deg.to_radians())?.to_degrees());
    }

    let cam = CameraModel::looking_down(0.5, 400.0, 224, 224)?;
    let g = GraspRectangle::new([150.0, 90.0], 0.5, 40.0, 20.0).to_grasp(0.9);
    let w = grasp_image_to_world(&g, 0.47, &cam)?;
    println!(
        "image grasp ({}, {}) at 0.47 m -> world ({:.4}, {:.4}, {:.4}) m, yaw {:.3} rad, opening {:.4} m",
        g.u, g.v, w.x, w.y, w.z, w.angle, w.width
    );
    Ok(())
}
