"""Speech editing: plans, masked training, prior patching, duration adjustment, edit inference."""
