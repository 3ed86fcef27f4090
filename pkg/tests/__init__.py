# __init__ file
import unittest


def get_tests():

    from .test_buffer import test_buffer
    from .test_cli import test_cli
    from .test_config import test_config
    from .test_domains import test_deformation, test_domain_sequence, test_streams
    from .test_engine import test_adapt, test_source_training
    from .test_harness import test_experiments, test_outputs, test_result_table, test_sweep_curve
    from .test_io import test_atomic, test_audit, test_cacheio, test_idxio, test_testio
    from .test_losses import test_losses, test_supervised_loss
    from .test_nets import test_checkpoint, test_models
    from .test_regimes import test_regimes
    from .test_seeding import test_seeding
    from .test_steps import test_adversarial_step, test_gan_step

    cases = [
        test_deformation,
        test_domain_sequence,
        test_streams,
        test_seeding,
        test_idxio,
        test_testio,
        test_cacheio,
        test_audit,
        test_atomic,
        test_models,
        test_checkpoint,
        test_losses,
        test_supervised_loss,
        test_adversarial_step,
        test_gan_step,
        test_buffer,
        test_regimes,
        test_source_training,
        test_adapt,
        test_config,
        test_result_table,
        test_sweep_curve,
        test_outputs,
        test_experiments,
        test_cli,
    ]
    loader = unittest.TestLoader()
    return unittest.TestSuite([loader.loadTestsFromTestCase(case) for case in cases])
